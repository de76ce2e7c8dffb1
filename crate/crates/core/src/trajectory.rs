//! Time-discrete trajectories `(u, Du, u̇)` on a family of broken spaces and
//! the discrete norms of the product spaces built from them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::element_gradients;
use crate::crack::{BrokenSpace, Schedule, SpaceFamily};
use crate::error::{Error, Result};
use crate::linalg::{frob, FullMatrix};

/// State at one time node. `u`, `v`, `a` live in the space with `open`
/// open seam facets; `grad` holds one full matrix per element.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub open: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub grad: Vec<FullMatrix>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub family: Arc<SpaceFamily>,
    pub t0: f64,
    pub dt: f64,
    pub nodes: Vec<NodeState>,
}

/// Squared norms `‖u‖², ‖Du‖², ‖v‖²` of a single node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeNorms {
    pub u: f64,
    pub du: f64,
    pub v: f64,
}

impl NodeNorms {
    pub fn total(&self) -> f64 {
        self.u + self.du + self.v
    }
}

fn grad_norm_sq(space: &BrokenSpace, g: &[FullMatrix]) -> f64 {
    let mesh = space.mesh();
    let d = space.dim();
    g.iter()
        .zip(mesh.elements())
        .map(|(a, el)| el.measure * frob(d, a, a))
        .sum()
}

fn same_family(a: &Arc<SpaceFamily>, b: &Arc<SpaceFamily>) -> bool {
    Arc::ptr_eq(a, b) || (a.mesh() == b.mesh() && a.seam() == b.seam())
}

impl NodeState {
    /// Node with all fields built from a displacement in `space`.
    pub fn from_displacement(space: &BrokenSpace, u: Vec<f64>, v: Vec<f64>, a: Vec<f64>) -> NodeState {
        let grad = element_gradients(space, &u);
        NodeState { open: space.open(), u, v, a, grad }
    }
}

impl TrajectoryState {
    pub fn new(family: Arc<SpaceFamily>, t0: f64, dt: f64, nodes: Vec<NodeState>) -> TrajectoryState {
        TrajectoryState { family, t0, dt, nodes }
    }

    /// Identically zero trajectory following the open counts of `schedule`.
    pub fn zero(family: Arc<SpaceFamily>, schedule: &Schedule, t0: f64, dt: f64, steps: usize) -> TrajectoryState {
        let n_el = family.mesh().n_elements();
        let nodes = (0..=steps)
            .map(|k| {
                let space = family.space_at(schedule, t0 + k as f64 * dt);
                let z = vec![0.0; space.n_dofs()];
                NodeState { open: space.open(), u: z.clone(), v: z.clone(), a: z, grad: vec![[0.0; 4]; n_el] }
            })
            .collect();
        TrajectoryState { family, t0, dt, nodes }
    }

    /// Seeded random element of the discrete product space, affine in time
    /// and in space: each slot is `Σ_p (A_p + (t−t0)/T·B_p)·p` over the
    /// monomials `p ∈ {1, x, y}`. Slots are independent of each other.
    pub fn random_smooth(
        family: Arc<SpaceFamily>,
        schedule: &Schedule,
        t0: f64,
        dt: f64,
        steps: usize,
        seed: u64,
    ) -> TrajectoryState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = |n: usize| -> Vec<[f64; 6]> {
            (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect()
        };
        let cu = coeffs(2);
        let cv = coeffs(2);
        let cg = coeffs(4);
        let horizon = (steps as f64 * dt).max(f64::MIN_POSITIVE);
        let eval = |c: &[f64; 6], p: [f64; 2], s: f64| {
            let m = [1.0, p[0], p[1]];
            (0..3).map(|i| (c[i] + s * c[3 + i]) * m[i]).sum::<f64>()
        };
        let d = family.mesh().dim();
        let centroids = family.mesh().centroids();
        let nodes = (0..=steps)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                let s = k as f64 * dt / horizon;
                let space = family.space_at(schedule, t);
                let u = space.interpolate(|p| [eval(&cu[0], p, s), eval(&cu[1], p, s)]);
                let v = space.interpolate(|p| [eval(&cv[0], p, s), eval(&cv[1], p, s)]);
                let grad = centroids
                    .iter()
                    .map(|&p| {
                        if d == 1 {
                            [eval(&cg[0], p, s), 0.0, 0.0, 0.0]
                        } else {
                            std::array::from_fn(|i| eval(&cg[i], p, s))
                        }
                    })
                    .collect();
                let a = vec![0.0; space.n_dofs()];
                NodeState { open: space.open(), u, v, a, grad }
            })
            .collect();
        TrajectoryState { family, t0, dt, nodes }
    }

    pub fn steps(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes.len()).map(|k| self.time(k)).collect()
    }

    pub fn space(&self, k: usize) -> &BrokenSpace {
        self.family.space(self.nodes[k].open)
    }

    pub fn last(&self) -> &NodeState {
        self.nodes.last().expect("trajectory has at least one node")
    }

    /// Displacement and velocity of node `k` carried into the space with
    /// `open` facets (which must contain the node's own space).
    pub fn embedded(&self, k: usize, open: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let [u, v, _] = self.embedded_all(k, open)?;
        Ok((u, v))
    }

    fn embedded_all(&self, k: usize, open: usize) -> Result<[Vec<f64>; 3]> {
        let n = &self.nodes[k];
        if n.open == open {
            return Ok([n.u.clone(), n.v.clone(), n.a.clone()]);
        }
        let map = self.family.transfer(n.open, open)?;
        Ok([map.apply(&n.u), map.apply(&n.v), map.apply(&n.a)])
    }

    pub fn node_norms(&self, k: usize) -> NodeNorms {
        let n = &self.nodes[k];
        let space = self.space(k);
        let m = space.mass();
        NodeNorms { u: m.form(&n.u, &n.u), du: grad_norm_sq(space, &n.grad), v: m.form(&n.v, &n.v) }
    }

    fn check_compatible(&self, other: &TrajectoryState) -> Result<()> {
        if !same_family(&self.family, &other.family) {
            return Err(Error::Precondition("trajectories live on different space families".into()));
        }
        if self.nodes.len() != other.nodes.len() {
            return Err(Error::DimensionMismatch { expected: self.nodes.len(), found: other.nodes.len() });
        }
        let tol = 1e-12 * self.dt.abs().max(1.0);
        if (self.dt - other.dt).abs() > tol || (self.t0 - other.t0).abs() > tol {
            return Err(Error::Precondition(format!(
                "time grids differ: (t0 {}, dt {}) vs (t0 {}, dt {})",
                self.t0, self.dt, other.t0, other.dt
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`, node by node in the larger of the two spaces.
    pub fn combine(&self, a: f64, other: &TrajectoryState, b: f64) -> Result<TrajectoryState> {
        self.check_compatible(other)?;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for k in 0..self.nodes.len() {
            let open = self.nodes[k].open.max(other.nodes[k].open);
            let [u1, v1, a1] = self.embedded_all(k, open)?;
            let [u2, v2, a2] = other.embedded_all(k, open)?;
            let acc = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| a * p + b * q).collect() };
            let grad = self.nodes[k]
                .grad
                .iter()
                .zip(&other.nodes[k].grad)
                .map(|(g, h)| std::array::from_fn(|i| a * g[i] + b * h[i]))
                .collect();
            nodes.push(NodeState { open, u: acc(&u1, &u2), v: acc(&v1, &v2), a: acc(&a1, &a2), grad });
        }
        Ok(TrajectoryState { family: self.family.clone(), t0: self.t0, dt: self.dt, nodes })
    }

    pub fn scaled(&self, s: f64) -> TrajectoryState {
        let mut out = self.clone();
        for n in &mut out.nodes {
            for x in n.u.iter_mut().chain(n.v.iter_mut()).chain(n.a.iter_mut()) {
                *x *= s;
            }
            for g in &mut n.grad {
                g.iter_mut().for_each(|x| *x *= s);
            }
        }
        out
    }

    /// Trapezoid-in-time `𝒲` norm.
    pub fn w_norm(&self) -> f64 {
        let n = self.nodes.len();
        if n < 2 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .map(|k| {
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                w * self.node_norms(k).total()
            })
            .sum();
        (self.dt * total).sqrt()
    }

    /// `max_k (‖u_k‖² + ‖Du_k‖²)^{1/2} + max_k ‖v_k‖`.
    pub fn v_inf_norm(&self) -> f64 {
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for k in 0..self.nodes.len() {
            let n = self.node_norms(k);
            a = a.max((n.u + n.du).sqrt());
            b = b.max(n.v.sqrt());
        }
        a + b
    }

    /// `max_k (‖u_k‖ + ‖Du_k‖ + ‖v_k‖)`.
    pub fn uniform_bound(&self) -> f64 {
        (0..self.nodes.len())
            .map(|k| {
                let n = self.node_norms(k);
                n.u.sqrt() + n.du.sqrt() + n.v.sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Concatenates consecutive pieces, dropping each piece's first node
    /// (it repeats the previous piece's last node).
    pub fn concat(parts: Vec<TrajectoryState>) -> Result<TrajectoryState> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| Error::Precondition("nothing to concatenate".into()))?;
        for p in it {
            let tol = 1e-9 * out.dt;
            if !same_family(&out.family, &p.family) || (p.dt - out.dt).abs() > tol || (p.t0 - out.t_end()).abs() > tol {
                return Err(Error::Precondition(format!(
                    "piece starting at {} does not continue a trajectory ending at {}",
                    p.t0,
                    out.t_end()
                )));
            }
            out.nodes.extend(p.nodes.into_iter().skip(1));
        }
        Ok(out)
    }
}

/// `‖a − b‖_𝒲` with both trajectories embedded node-wise into the larger
/// broken space.
pub fn discrete_wnorm(a: &TrajectoryState, b: &TrajectoryState) -> Result<f64> {
    Ok(a.combine(1.0, b, -1.0)?.w_norm())
}

/// `max_k (‖Δu_k‖² + ‖ΔDu_k‖² + ‖Δv_k‖²)^{1/2}`.
pub fn sup_product_distance(a: &TrajectoryState, b: &TrajectoryState) -> Result<f64> {
    let d = a.combine(1.0, b, -1.0)?;
    Ok((0..d.nodes.len()).map(|k| d.node_norms(k).total().sqrt()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::CrackPath;
    use crate::domain::{Domain, Side};

    fn family2d() -> Arc<SpaceFamily> {
        let d = Domain::unit_square(&[Side::Bottom]).unwrap();
        let p = CrackPath::new(2, vec![[0.0, 0.5], [1.0, 0.5]]).unwrap();
        Arc::new(SpaceFamily::build(&d, &p, 0.25).unwrap())
    }

    #[test]
    fn self_distance_is_zero_and_doubling_gives_norm() {
        let f = family2d();
        let sched = Schedule::linear(0.0, 1.0).unwrap();
        let w = TrajectoryState::random_smooth(f, &sched, 0.0, 0.05, 20, 3);
        assert_eq!(discrete_wnorm(&w, &w).unwrap(), 0.0);
        let two = w.scaled(2.0);
        let d = discrete_wnorm(&w, &two).unwrap();
        assert!((d - w.w_norm()).abs() <= 1e-12 * w.w_norm());
    }

    #[test]
    fn affine_in_time_closed_form() {
        // u ≡ t and v ≡ 1 on the unit interval: ∫₀¹ (t² + 1) dt
        // by the trapezoid rule is 4/3 + 1/(6N²).
        let d = Domain::interval(0.0, 1.0, &[]).unwrap();
        let p = CrackPath::new(1, vec![[0.5, 0.0]]).unwrap();
        let f = Arc::new(SpaceFamily::build(&d, &p, 0.5).unwrap());
        let sched = Schedule::constant(0.0);
        let n = 10;
        let dt = 1.0 / n as f64;
        let mut w = TrajectoryState::zero(f.clone(), &sched, 0.0, dt, n);
        for (k, node) in w.nodes.iter_mut().enumerate() {
            node.u.iter_mut().for_each(|x| *x = k as f64 * dt);
            node.v.iter_mut().for_each(|x| *x = 1.0);
        }
        let expect = (4.0 / 3.0 + 1.0 / (6.0 * (n * n) as f64)).sqrt();
        assert!((w.w_norm() - expect).abs() < 1e-13, "{} vs {expect}", w.w_norm());
    }

    #[test]
    fn grids_must_match() {
        let f = family2d();
        let sched = Schedule::constant(0.0);
        let a = TrajectoryState::zero(f.clone(), &sched, 0.0, 0.1, 5);
        let b = TrajectoryState::zero(f, &sched, 0.0, 0.2, 5);
        assert!(discrete_wnorm(&a, &b).is_err());
    }

    #[test]
    fn concat_drops_shared_node() {
        let f = family2d();
        let sched = Schedule::constant(0.0);
        let a = TrajectoryState::zero(f.clone(), &sched, 0.0, 0.1, 5);
        let b = TrajectoryState::zero(f, &sched, 0.5, 0.1, 5);
        let c = TrajectoryState::concat(vec![a, b]).unwrap();
        assert_eq!(c.steps(), 10);
        assert!((c.t_end() - 1.0).abs() < 1e-14);
    }
}
