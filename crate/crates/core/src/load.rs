//! Scenario data: initial state, body force `f`, matrix load `F` and the
//! Dirichlet datum, given as closed-form expressions in `(x, y, t)`.

use crate::crack::BrokenSpace;
use crate::expr::Expr;
use crate::linalg::{Mandel, SQRT2};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadData {
    pub u0: [Expr; 2],
    pub u1: [Expr; 2],
    pub f: [Expr; 2],
    /// `F_xx, F_yy, F_xy` (F is symmetric).
    pub stress: [Expr; 3],
    u_d: [Expr; 2],
    /// Global factor applied to every datum.
    pub scale: f64,
    u_d_t: [Expr; 2],
    u_d_tt: [Expr; 2],
}

fn zeros<const N: usize>() -> [Expr; N] {
    std::array::from_fn(|_| Expr::zero())
}

impl Default for LoadData {
    fn default() -> Self {
        LoadData::zero()
    }
}

impl LoadData {
    pub fn new(u0: [Expr; 2], u1: [Expr; 2], f: [Expr; 2], stress: [Expr; 3], u_d: [Expr; 2]) -> LoadData {
        let u_d_t = std::array::from_fn(|i| u_d[i].derivative_t());
        let u_d_tt = std::array::from_fn(|i| u_d_t[i].derivative_t());
        LoadData { u0, u1, f, stress, u_d, scale: 1.0, u_d_t, u_d_tt }
    }

    pub fn zero() -> LoadData {
        LoadData::new(zeros(), zeros(), zeros(), zeros(), zeros())
    }

    /// Dirichlet datum expressions.
    pub fn u_d(&self) -> &[Expr; 2] {
        &self.u_d
    }

    pub fn with_dirichlet(&self, u_d: [Expr; 2]) -> LoadData {
        let mut out = LoadData::new(self.u0.clone(), self.u1.clone(), self.f.clone(), self.stress.clone(), u_d);
        out.scale = self.scale;
        out
    }

    pub fn scaled(&self, factor: f64) -> LoadData {
        LoadData { scale: self.scale * factor, ..self.clone() }
    }

    fn all(&self) -> impl Iterator<Item = &Expr> {
        self.u0.iter().chain(&self.u1).chain(&self.f).chain(&self.stress).chain(&self.u_d)
    }

    /// True when every datum is the literal zero (or the scale is zero).
    pub fn is_zero(&self) -> bool {
        self.scale == 0.0 || self.all().all(Expr::is_zero)
    }

    pub fn has_dirichlet_datum(&self) -> bool {
        self.scale != 0.0 && self.u_d.iter().any(|e| !e.is_zero())
    }

    fn nodal(&self, space: &BrokenSpace, exprs: &[Expr; 2], t: f64) -> Vec<f64> {
        let d = space.dim();
        let mesh = space.mesh();
        let per_vertex: Vec<[f64; 2]> = (0..mesh.n_vertices())
            .map(|v| {
                let p = mesh.vertex(v);
                [0, 1].map(|c| if c < d { self.scale * exprs[c].eval(p[0], p[1], t) } else { 0.0 })
            })
            .collect();
        let mut out = vec![0.0; space.n_dofs()];
        for n in 0..space.n_nodes() {
            let v = per_vertex[space.node_vertex(n)];
            out[n * d..n * d + d].copy_from_slice(&v[..d]);
        }
        out
    }

    pub fn initial_displacement(&self, space: &BrokenSpace) -> Vec<f64> {
        self.nodal(space, &self.u0, 0.0)
    }

    pub fn initial_velocity(&self, space: &BrokenSpace) -> Vec<f64> {
        self.nodal(space, &self.u1, 0.0)
    }

    pub fn body_force(&self, space: &BrokenSpace, t: f64) -> Vec<f64> {
        self.nodal(space, &self.f, t)
    }

    /// Dirichlet datum (`order` 0), or its first or second time derivative.
    pub fn dirichlet(&self, space: &BrokenSpace, t: f64, order: usize) -> Vec<f64> {
        match order {
            0 => self.nodal(space, &self.u_d, t),
            1 => self.nodal(space, &self.u_d_t, t),
            _ => self.nodal(space, &self.u_d_tt, t),
        }
    }

    /// `F(t)` at element centroids.
    pub fn matrix_load(&self, mesh: &Mesh, t: f64) -> Vec<Mandel> {
        let d = mesh.dim();
        mesh.elements()
            .iter()
            .map(|el| {
                let [x, y] = el.centroid;
                let s = self.scale;
                if d == 1 {
                    [s * self.stress[0].eval(x, y, t), 0.0, 0.0]
                } else {
                    [
                        s * self.stress[0].eval(x, y, t),
                        s * self.stress[1].eval(x, y, t),
                        s * SQRT2 * self.stress[2].eval(x, y, t),
                    ]
                }
            })
            .collect()
    }
}
