//! P1 finite-element assembly on broken spaces.
//!
//! Every matrix assembled on a given space shares one sparsity pattern (all
//! couplings inside an element, explicit zeros included), so linear
//! combinations are cheap entrywise operations.

use crate::crack::BrokenSpace;
use crate::error::{ConfigIssue, Error, Result};
use crate::linalg::{FullMatrix, Mandel, SQRT2};
use crate::mesh::Element;
use crate::sparse::{pcg, CgSettings, CgStats, CsrMatrix, TripletBuilder};
use crate::tensor::{SymOp, Tensor4Field};

/// Mandel strain of each local basis function, indexed `a·d + c` for node
/// `a` and component `c`.
pub fn strain_operator(dim: usize, el: &Element) -> Vec<Mandel> {
    let mut rows = Vec::with_capacity((dim + 1) * dim);
    for a in 0..=dim {
        let g = el.grads[a];
        if dim == 1 {
            rows.push([g[0], 0.0, 0.0]);
        } else {
            rows.push([g[0], 0.0, g[1] / SQRT2]);
            rows.push([0.0, g[1], g[0] / SQRT2]);
        }
    }
    rows
}

fn local_dofs(space: &BrokenSpace, e: usize) -> Vec<usize> {
    let d = space.dim();
    space
        .element_nodes(e)
        .iter()
        .flat_map(|&n| (0..d).map(move |c| n * d + c))
        .collect()
}

fn assemble_with(space: &BrokenSpace, mut element: impl FnMut(usize, &Element, &mut [f64])) -> CsrMatrix {
    let mesh = space.mesh();
    let nloc = (space.dim() + 1) * space.dim();
    let mut b = TripletBuilder::new(space.n_dofs());
    let mut ke = vec![0.0; nloc * nloc];
    for e in 0..mesh.n_elements() {
        ke.iter_mut().for_each(|v| *v = 0.0);
        element(e, mesh.element(e), &mut ke);
        let dofs = local_dofs(space, e);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                b.add(gi, gj, ke[i * nloc + j]);
            }
        }
    }
    b.build()
}

/// Consistent P1 mass matrix (density 1).
pub fn assemble_mass(space: &BrokenSpace) -> CsrMatrix {
    let d = space.dim();
    let nloc = (d + 1) * d;
    let denom = ((d + 1) * (d + 2)) as f64;
    assemble_with(space, |_, el, ke| {
        for a in 0..=d {
            for b in 0..=d {
                let m = el.measure * if a == b { 2.0 } else { 1.0 } / denom;
                for c in 0..d {
                    ke[(a * d + c) * nloc + b * d + c] = m;
                }
            }
        }
    })
}

/// `∫ T Eφ_j : Eφ_i` with one operator per element.
pub fn assemble_stiffness_ops(space: &BrokenSpace, ops: &[SymOp]) -> CsrMatrix {
    let d = space.dim();
    let nloc = (d + 1) * d;
    assemble_with(space, |e, el, ke| {
        let bm = strain_operator(d, el);
        let tb: Vec<Mandel> = bm.iter().map(|s| ops[e].apply(s)).collect();
        for i in 0..nloc {
            for j in 0..nloc {
                ke[i * nloc + j] = el.measure * (0..3).map(|k| bm[i][k] * tb[j][k]).sum::<f64>();
            }
        }
    })
}

/// Samples `tensor` at element centroids.
pub fn element_tensors(space: &BrokenSpace, tensor: &Tensor4Field) -> Result<Vec<SymOp>> {
    if tensor.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: tensor.dim() });
    }
    space.mesh().elements().iter().map(|el| tensor.at(el.centroid)).collect()
}

pub fn assemble_stiffness(space: &BrokenSpace, tensor: &Tensor4Field) -> Result<CsrMatrix> {
    Ok(assemble_stiffness_ops(space, &element_tensors(space, tensor)?))
}

/// Gram matrix of the full gradient, `∫ Dφ_j : Dφ_i`.
pub fn assemble_gradient_gram(space: &BrokenSpace) -> CsrMatrix {
    let d = space.dim();
    let nloc = (d + 1) * d;
    assemble_with(space, |_, el, ke| {
        for a in 0..=d {
            for b in 0..=d {
                let g: f64 = (0..d).map(|k| el.grads[a][k] * el.grads[b][k]).sum();
                for c in 0..d {
                    ke[(a * d + c) * nloc + b * d + c] = el.measure * g;
                }
            }
        }
    })
}

/// Element-wise gradient `Du` (row-major, `Du[i][j] = ∂_j u_i`).
pub fn element_gradients(space: &BrokenSpace, u: &[f64]) -> Vec<FullMatrix> {
    let d = space.dim();
    let mesh = space.mesh();
    (0..mesh.n_elements())
        .map(|e| {
            let el = mesh.element(e);
            let mut g = [0.0; 4];
            for (a, &n) in space.element_nodes(e).iter().enumerate() {
                for i in 0..d {
                    for j in 0..d {
                        g[i * 2 + j] += u[n * d + i] * el.grads[a][j];
                    }
                }
            }
            if d == 1 {
                [g[0], 0.0, 0.0, 0.0]
            } else {
                g
            }
        })
        .collect()
}

/// Element-wise strain `Eu` in Mandel form.
pub fn element_strains(space: &BrokenSpace, u: &[f64]) -> Vec<Mandel> {
    let d = space.dim();
    element_gradients(space, u)
        .iter()
        .map(|g| crate::linalg::to_mandel(d, g))
        .collect()
}

/// `(σ, Eφ_i)` for an element-wise constant symmetric field σ.
pub fn divergence_load(space: &BrokenSpace, sigma: &[Mandel]) -> Vec<f64> {
    let d = space.dim();
    let mesh = space.mesh();
    let mut out = vec![0.0; space.n_dofs()];
    for e in 0..mesh.n_elements() {
        let el = mesh.element(e);
        let s = &sigma[e];
        if s.iter().all(|v| *v == 0.0) {
            continue;
        }
        let bm = strain_operator(d, el);
        for (i, gi) in local_dofs(space, e).into_iter().enumerate() {
            out[gi] += el.measure * (0..3).map(|k| bm[i][k] * s[k]).sum::<f64>();
        }
    }
    out
}

/// `(f, φ_i) + (F, Eφ_i)` for nodal `f` and element-wise `F`.
pub fn assemble_load(space: &BrokenSpace, mass: &CsrMatrix, f_nodal: &[f64], big_f: &[Mandel]) -> Vec<f64> {
    let mut out = mass.mul(f_nodal);
    for (o, g) in out.iter_mut().zip(divergence_load(space, big_f)) {
        *o += g;
    }
    out
}

/// Prescribed values on constrained dofs, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletLift {
    pub values: Vec<f64>,
}

/// Restricts nodal Dirichlet data to the constrained dofs.
pub fn lift_dirichlet(space: &BrokenSpace, u_d: &[f64]) -> Result<DirichletLift> {
    let mask = space.constrained();
    if !mask.iter().any(|c| *c) && u_d.iter().any(|v| *v != 0.0) {
        return Err(Error::Config(vec![ConfigIssue {
            line: 0,
            message: "nonzero Dirichlet datum but no side is tagged Dirichlet".into(),
        }]));
    }
    let values = u_d
        .iter()
        .zip(mask)
        .map(|(v, c)| if *c { *v } else { 0.0 })
        .collect();
    Ok(DirichletLift { values })
}

/// Solves `K u = load` with `u = lift` on constrained dofs.
pub fn solve_static(space: &BrokenSpace, k: &CsrMatrix, load: &[f64], lift: &DirichletLift, cg: CgSettings) -> Result<(Vec<f64>, CgStats)> {
    let mask = space.constrained();
    let ku = k.mul(&lift.values);
    let rhs: Vec<f64> = load.iter().zip(&ku).map(|(l, q)| l - q).collect();
    let mut u = lift.values.clone();
    let stats = pcg(k, &rhs, &mut u, mask, cg)?;
    Ok((u, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::{CrackPath, SpaceFamily};
    use crate::domain::{Domain, Side};
    use crate::linalg::{frob, sym_part};
    use crate::mesh::Mesh;
    use std::sync::Arc;

    fn square(h: f64, dirichlet: &[Side]) -> SpaceFamily {
        let d = Domain::unit_square(dirichlet).unwrap();
        let p = CrackPath::new(2, vec![[0.0, 0.5], [1.0, 0.5]]).unwrap();
        SpaceFamily::build(&d, &p, h).unwrap()
    }

    #[test]
    fn total_mass_is_dim_times_area() {
        let f = square(0.25, &[]);
        for open in [0, 2, 4] {
            let s = f.space(open);
            let m = assemble_mass(s);
            let one = vec![1.0; s.n_dofs()];
            assert!((m.form(&one, &one) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rigid_motions_are_in_the_kernel() {
        let f = square(0.25, &[]);
        let s = f.space(3);
        let c = Tensor4Field::isotropic(2, f.domain().bounds, 1.0, 1.0);
        let k = assemble_stiffness(s, &c).unwrap();
        for v in [s.interpolate(|_| [1.0, -2.0]), s.interpolate(|p| [-p[1], p[0]])] {
            let kv = k.mul(&v);
            assert!(kv.iter().all(|x| x.abs() < 1e-12));
        }
        assert!(k.asymmetry() < 1e-14);
    }

    #[test]
    fn closed_seam_matches_uncracked_assembly() {
        let f = square(0.25, &[Side::Left]);
        let s = f.space(0);
        let d = Domain::unit_square(&[Side::Left]).unwrap();
        let plain = Mesh::structured(&d, 0.25).unwrap();
        assert_eq!(s.mesh().as_ref(), &plain);
        let c = Tensor4Field::isotropic(2, d.bounds, 1.0, 0.5);
        let k = assemble_stiffness(s, &c).unwrap();
        assert_eq!(k.size(), 2 * plain.n_vertices());
        let direct = assemble_stiffness(&BrokenSpace::continuous(Arc::new(plain)), &c).unwrap();
        assert_eq!(k, direct);
    }

    #[test]
    fn split_mass_sums_to_uncracked_mass() {
        let f = square(0.25, &[]);
        let closed = assemble_mass(f.space(0));
        let open = assemble_mass(f.space(4));
        let t = f.transfer(0, 4).unwrap();
        let u0 = f.space(0).interpolate(|p| [p[0] + p[1] * p[1], p[0] * p[1]]);
        let u4 = t.apply(&u0);
        assert!((closed.form(&u0, &u0) - open.form(&u4, &u4)).abs() < 1e-14);
    }

    #[test]
    fn reference_element_identity_stiffness() {
        let mesh = Mesh::from_parts(2, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let el = mesh.element(0);
        let bm = strain_operator(2, el);
        // hand expansion: φ = λ_a e_c has Dφ = e_c ⊗ ∇λ_a
        let grads = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..6 {
            for j in 0..6 {
                let full = |k: usize| {
                    let (a, c) = (k / 2, k % 2);
                    let mut m = [0.0; 4];
                    m[c * 2] = grads[a][0];
                    m[c * 2 + 1] = grads[a][1];
                    sym_part(2, &m)
                };
                let expect = 0.5 * frob(2, &full(i), &full(j));
                let got = el.measure * (0..3).map(|k| bm[i][k] * bm[j][k]).sum::<f64>();
                assert!((expect - got).abs() < 1e-15, "{i} {j}");
            }
        }
        // two entries by hand
        assert!((el.measure * bm[2].iter().map(|x| x * x).sum::<f64>() - 0.5).abs() < 1e-15);
        assert!((el.measure * bm[4].iter().map(|x| x * x).sum::<f64>() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn reference_element_mass() {
        let mesh = Mesh::from_parts(2, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let s = BrokenSpace::continuous(Arc::new(mesh));
        let m = assemble_mass(&s);
        for a in 0..3 {
            for b in 0..3 {
                let expect = 0.5 / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((m.get(2 * a, 2 * b) - expect).abs() < 1e-16);
                assert!((m.get(2 * a + 1, 2 * b + 1) - expect).abs() < 1e-16);
                assert_eq!(m.get(2 * a, 2 * b + 1), 0.0);
            }
        }
    }

    #[test]
    fn constant_stress_load_is_boundary_traction() {
        let f = square(0.25, &[]);
        let s = f.space(0);
        let sigma = crate::linalg::to_mandel(2, &[1.0, 0.3, 0.3, -0.5]);
        let load = divergence_load(s, &vec![sigma; s.mesh().n_elements()]);
        // oracle: ∫_∂Ω σν·φ_i, trapezoid-exact for piecewise-linear φ
        let sig = [[1.0, 0.3], [0.3, -0.5]];
        let mut expect = vec![0.0; s.n_dofs()];
        let n = 4;
        let h = 0.25;
        let mut edge = |a: usize, b: usize, nu: [f64; 2]| {
            for v in [a, b] {
                for c in 0..2 {
                    expect[2 * v + c] += 0.5 * h * (sig[c][0] * nu[0] + sig[c][1] * nu[1]);
                }
            }
        };
        let id = |i: usize, j: usize| j * (n + 1) + i;
        for k in 0..n {
            edge(id(k, 0), id(k + 1, 0), [0.0, -1.0]);
            edge(id(k, n), id(k + 1, n), [0.0, 1.0]);
            edge(id(0, k), id(0, k + 1), [-1.0, 0.0]);
            edge(id(n, k), id(n, k + 1), [1.0, 0.0]);
        }
        for i in 0..s.n_dofs() {
            assert!((load[i] - expect[i]).abs() < 1e-14, "dof {i}");
        }
    }

    #[test]
    fn constant_dirichlet_gives_constant_static_solution() {
        let f = square(0.25, &Side::ALL);
        let s = f.space(0);
        let c = Tensor4Field::isotropic(2, f.domain().bounds, 1.0, 1.0);
        let k = assemble_stiffness(s, &c).unwrap();
        let ud = s.interpolate(|_| [0.7, -0.2]);
        let lift = lift_dirichlet(s, &ud).unwrap();
        let (u, _) = solve_static(s, &k, &vec![0.0; s.n_dofs()], &lift, CgSettings::default()).unwrap();
        for n in 0..s.n_nodes() {
            assert!((u[2 * n] - 0.7).abs() < 1e-12 && (u[2 * n + 1] + 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_datum_without_dirichlet_side_is_config_error() {
        let f = square(0.5, &[]);
        let s = f.space(0);
        let ud = s.interpolate(|_| [1.0, 0.0]);
        assert!(matches!(lift_dirichlet(s, &ud), Err(Error::Config(_))));
        assert!(lift_dirichlet(s, &vec![0.0; s.n_dofs()]).is_ok());
    }
}
