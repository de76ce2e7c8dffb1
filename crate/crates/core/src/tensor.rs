//! Fourth-order material tensors acting on symmetric matrices.
//!
//! A tensor is stored as a dense matrix in the orthonormal symmetric basis
//! (see [`crate::linalg`]). In that basis the major symmetry of the tensor is
//! the symmetry of the matrix, and the coercivity constant is its smallest
//! eigenvalue.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Bounds;
use crate::error::{Error, Result};
use crate::linalg::{dot, n_sym, to_mandel, FullMatrix, Mandel};

/// Seed of the pseudo-random part of the symmetry probe set.
pub const PROBE_SEED: u64 = 42;
/// Number of pseudo-random probe matrices added to the canonical basis.
pub const PROBE_RANDOM: usize = 8;

/// Tensor values at a point: a dense `n_sym × n_sym` matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymOp {
    n: usize,
    m: [[f64; 3]; 3],
}

impl SymOp {
    pub fn zero(dim: usize) -> Self {
        SymOp { n: n_sym(dim), m: [[0.0; 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zero(dim);
        for i in 0..op.n {
            op.m[i][i] = 1.0;
        }
        op
    }

    /// `A ↦ λ tr(A) I + 2μ A`.
    pub fn isotropic(dim: usize, lambda: f64, mu: f64) -> Self {
        let mut op = Self::zero(dim);
        if dim == 1 {
            op.m[0][0] = lambda + 2.0 * mu;
        } else {
            op.m[0][0] = lambda + 2.0 * mu;
            op.m[1][1] = lambda + 2.0 * mu;
            op.m[0][1] = lambda;
            op.m[1][0] = lambda;
            op.m[2][2] = 2.0 * mu;
        }
        op
    }

    /// Row-major coefficients in the orthonormal symmetric basis.
    pub fn from_coefficients(dim: usize, coeffs: &[f64]) -> Result<Self> {
        let n = n_sym(dim);
        if coeffs.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: coeffs.len(),
            });
        }
        let mut op = Self::zero(dim);
        for i in 0..n {
            for j in 0..n {
                op.m[i][j] = coeffs[i * n + j];
            }
        }
        Ok(op)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn coefficients(&self) -> Vec<f64> {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.m[i][j])
            .collect()
    }

    pub fn apply(&self, a: &Mandel) -> Mandel {
        let mut out = [0.0; 3];
        for i in 0..self.n {
            out[i] = (0..self.n).map(|j| self.m[i][j] * a[j]).sum();
        }
        out
    }

    pub fn add(&self, other: &SymOp) -> SymOp {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] += other.m[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> SymOp {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] *= s;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.m[i][j] == 0.0))
    }

    fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.m[i][j])
    }

    /// Eigen-decomposition of the symmetric part, eigenvalues ascending.
    pub fn sym_eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let a = self.dense();
        let s = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..self.n)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    /// Operator norm on symmetric matrices with the Frobenius norm.
    pub fn norm(&self) -> f64 {
        let svd = self.dense().svd(false, false);
        svd.singular_values.iter().copied().fold(0.0, f64::max)
    }
}

/// Axis-aligned region used by piecewise-constant fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Region {
    fn contains(&self, dim: usize, p: [f64; 2]) -> bool {
        (0..dim).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Uniform(SymOp),
    Regions { pieces: Vec<(Region, SymOp)>, fallback: SymOp },
    Sum(Box<Tensor4Field>, Box<Tensor4Field>),
}

/// A tensor field on Ω̄, constant or piecewise constant over boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4Field {
    dim: usize,
    bounds: Bounds,
    values: Values,
}

impl Tensor4Field {
    pub fn uniform(dim: usize, bounds: Bounds, op: SymOp) -> Self {
        Tensor4Field { dim, bounds, values: Values::Uniform(op) }
    }

    pub fn isotropic(dim: usize, bounds: Bounds, lambda: f64, mu: f64) -> Self {
        Self::uniform(dim, bounds, SymOp::isotropic(dim, lambda, mu))
    }

    pub fn identity(dim: usize, bounds: Bounds) -> Self {
        Self::uniform(dim, bounds, SymOp::identity(dim))
    }

    pub fn zero(dim: usize, bounds: Bounds) -> Self {
        Self::uniform(dim, bounds, SymOp::zero(dim))
    }

    /// First matching region wins; points outside every region use `fallback`.
    pub fn piecewise(dim: usize, bounds: Bounds, pieces: Vec<(Region, SymOp)>, fallback: SymOp) -> Self {
        Tensor4Field { dim, bounds, values: Values::Regions { pieces, fallback } }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// The constant value, when the field is uniform.
    pub fn as_uniform(&self) -> Option<SymOp> {
        match &self.values {
            Values::Uniform(op) => Some(*op),
            _ => None,
        }
    }

    pub fn at(&self, x: [f64; 2]) -> Result<SymOp> {
        if !self.bounds.contains(self.dim, x) {
            return Err(Error::Domain { point: x });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: [f64; 2]) -> SymOp {
        match &self.values {
            Values::Uniform(op) => *op,
            Values::Regions { pieces, fallback } => pieces
                .iter()
                .find(|(r, _)| r.contains(self.dim, x))
                .map_or(*fallback, |(_, op)| *op),
            Values::Sum(a, b) => a.eval_unchecked(x).add(&b.eval_unchecked(x)),
        }
    }

    /// `T(x)A` for a symmetric `A` given in Mandel form.
    pub fn apply(&self, x: [f64; 2], a: &Mandel) -> Result<Mandel> {
        Ok(self.at(x)?.apply(a))
    }

    pub fn scaled(&self, s: f64) -> Tensor4Field {
        let values = match &self.values {
            Values::Uniform(op) => Values::Uniform(op.scale(s)),
            Values::Regions { pieces, fallback } => Values::Regions {
                pieces: pieces.iter().map(|(r, op)| (*r, op.scale(s))).collect(),
                fallback: fallback.scale(s),
            },
            Values::Sum(a, b) => Values::Sum(Box::new(a.scaled(s)), Box::new(b.scaled(s))),
        };
        Tensor4Field { dim: self.dim, bounds: self.bounds, values }
    }

    /// Pointwise sum. Two uniform fields collapse to a uniform field.
    pub fn sum(&self, other: &Tensor4Field) -> Result<Tensor4Field> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let values = match (&self.values, &other.values) {
            (Values::Uniform(a), Values::Uniform(b)) => Values::Uniform(a.add(b)),
            _ => Values::Sum(Box::new(self.clone()), Box::new(other.clone())),
        };
        Ok(Tensor4Field { dim: self.dim, bounds: self.bounds, values })
    }

    /// True when every sampled value is exactly zero.
    pub fn is_zero_on(&self, points: &[[f64; 2]]) -> bool {
        points.iter().all(|&p| self.eval_unchecked(p).is_zero())
    }

    /// Certified α₀: the minimum over `points` of the smallest eigenvalue of
    /// the (symmetrized) matrix representation.
    pub fn certify_coercivity(&self, points: &[[f64; 2]]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::Precondition("empty sample set".into()));
        }
        let mut best: Option<(f64, [f64; 2], Vec<f64>)> = None;
        for &p in points {
            let (vals, vecs) = self.at(p)?.sym_eigen();
            if best.as_ref().is_none_or(|b| vals[0] < b.0) {
                best = Some((vals[0], p, vecs[0].clone()));
            }
        }
        let (alpha, point, witness) = best.expect("nonempty");
        if alpha <= 0.0 {
            return Err(Error::CoercivityViolation { point, eigenvalue: alpha, witness });
        }
        Ok(alpha)
    }

    /// M₀: the maximum operator norm over `points`.
    pub fn max_norm(&self, points: &[[f64; 2]]) -> Result<f64> {
        let mut m = 0.0f64;
        for &p in points {
            m = m.max(self.at(p)?.norm());
        }
        Ok(m)
    }

    /// Largest relative defect `|(TA):B − A:(TB)| / (|A||B||T|)` over the
    /// probe set at the sampled points.
    pub fn symmetry_defect(&self, points: &[[f64; 2]]) -> Result<f64> {
        let probes = probe_set(self.dim);
        let mut worst = 0.0f64;
        for &p in points {
            let op = self.at(p)?;
            let scale = op.norm();
            if scale == 0.0 {
                continue;
            }
            for a in &probes {
                for b in &probes {
                    let lhs = dot(&op.apply(a), b);
                    let rhs = dot(a, &op.apply(b));
                    let denom = scale * dot(a, a).sqrt() * dot(b, b).sqrt();
                    worst = worst.max((lhs - rhs).abs() / denom);
                }
            }
        }
        Ok(worst)
    }
}

/// Canonical symmetric basis plus [`PROBE_RANDOM`] seeded random symmetric
/// matrices, all in Mandel form.
pub fn probe_set(dim: usize) -> Vec<Mandel> {
    let n = n_sym(dim);
    let mut out: Vec<Mandel> = (0..n)
        .map(|i| {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for _ in 0..PROBE_RANDOM {
        let mut a: FullMatrix = [0.0; 4];
        a[0] = rng.gen_range(-1.0..1.0);
        if dim == 2 {
            let off = rng.gen_range(-1.0..1.0);
            a[1] = off;
            a[2] = off;
            a[3] = rng.gen_range(-1.0..1.0);
        }
        out.push(to_mandel(dim, &a));
    }
    out
}

/// Extension of a tensor to full (non-symmetric) matrices: `A ↦ T(A_sym)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTensor {
    pub base: Tensor4Field,
}

impl ExtendedTensor {
    pub fn new(base: Tensor4Field) -> Self {
        ExtendedTensor { base }
    }

    pub fn apply(&self, x: [f64; 2], a: &FullMatrix) -> Result<Mandel> {
        self.base.apply(x, &to_mandel(self.base.dim, a))
    }
}

/// Result of the hypothesis validators on one tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCertificate {
    pub alpha0: f64,
    pub m0: f64,
    pub symmetry_defect: f64,
}

impl TensorCertificate {
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub fn symmetric(&self) -> bool {
        self.symmetry_defect <= Self::SYMMETRY_TOL
    }
}

/// Runs the symmetry, coercivity and boundedness checks on `points`.
pub fn certify(field: &Tensor4Field, points: &[[f64; 2]]) -> Result<TensorCertificate> {
    let symmetry_defect = field.symmetry_defect(points)?;
    if symmetry_defect > TensorCertificate::SYMMETRY_TOL {
        return Err(Error::Invariant(format!(
            "tensor is not symmetric: relative defect {symmetry_defect:e}"
        )));
    }
    Ok(TensorCertificate {
        alpha0: field.certify_coercivity(points)?,
        m0: field.max_norm(points)?,
        symmetry_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_mandel, frob};

    fn unit() -> Bounds {
        Bounds { min: [0.0, 0.0], max: [1.0, 1.0] }
    }

    fn brute_isotropic(lambda: f64, mu: f64, a: &FullMatrix) -> FullMatrix {
        let tr = a[0] + a[3];
        [
            lambda * tr + 2.0 * mu * a[0],
            2.0 * mu * a[1],
            2.0 * mu * a[2],
            lambda * tr + 2.0 * mu * a[3],
        ]
    }

    #[test]
    fn identity_maps_a_to_a() {
        let id = Tensor4Field::identity(2, unit());
        let a = to_mandel(2, &[0.3, -0.2, -0.2, 1.7]);
        assert_eq!(id.apply([0.5, 0.5], &a).unwrap(), a);
    }

    #[test]
    fn isotropic_half_shear_is_identity() {
        let t = Tensor4Field::isotropic(2, unit(), 0.0, 0.5);
        let a = to_mandel(2, &[0.3, -0.2, -0.2, 1.7]);
        let out = t.apply([0.1, 0.9], &a).unwrap();
        for i in 0..3 {
            assert!((out[i] - a[i]).abs() < 1e-15);
        }
        assert!((t.certify_coercivity(&[[0.5, 0.5]]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_law_on_identity() {
        let t = Tensor4Field::isotropic(2, unit(), 1.0, 1.0);
        let id = to_mandel(2, &[1.0, 0.0, 0.0, 1.0]);
        let out = from_mandel(2, &t.apply([0.2, 0.2], &id).unwrap());
        assert_eq!(out, [4.0, 0.0, 0.0, 4.0]);
        assert_eq!(frob(2, &out, &[1.0, 0.0, 0.0, 1.0]), 8.0);
        // brute-force basis expansion against the Mandel matrix
        for a in probe_set(2) {
            let full = from_mandel(2, &a);
            let expect = to_mandel(2, &brute_isotropic(1.0, 1.0, &full));
            let got = t.apply([0.2, 0.2], &a).unwrap();
            for i in 0..3 {
                assert!((expect[i] - got[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn outside_bounding_box_is_domain_error() {
        let t = Tensor4Field::identity(2, unit());
        assert!(matches!(t.apply([1.5, 0.5], &[1.0, 0.0, 0.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn negated_tensor_violates_coercivity() {
        let t = Tensor4Field::identity(2, unit()).scaled(-1.0);
        match t.certify_coercivity(&[[0.5, 0.5]]) {
            Err(Error::CoercivityViolation { eigenvalue, witness, .. }) => {
                assert_eq!(eigenvalue, -1.0);
                assert_eq!(witness.len(), 3);
            }
            other => panic!("expected violation, got {other:?}"),
        }
        assert!(t.certify_coercivity(&[]).is_err());
    }

    #[test]
    fn extension_kills_antisymmetric_part() {
        let ext = ExtendedTensor::new(Tensor4Field::isotropic(2, unit(), 1.0, 1.0));
        assert_eq!(ext.apply([0.5, 0.5], &[0.0, 2.0, -2.0, 0.0]).unwrap(), [0.0; 3]);
        let sym = [1.0, 0.5, 0.5, -1.0];
        assert_eq!(
            ext.apply([0.5, 0.5], &sym).unwrap(),
            ext.base.apply([0.5, 0.5], &to_mandel(2, &sym)).unwrap()
        );
        // rotation generator + I with the identity base symmetrizes to I
        let id_ext = ExtendedTensor::new(Tensor4Field::identity(2, unit()));
        let out = id_ext.apply([0.5, 0.5], &[1.0, -1.0, 1.0, 1.0]).unwrap();
        assert_eq!(from_mandel(2, &out), [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn sums() {
        let i = Tensor4Field::identity(2, unit());
        let two = i.sum(&i).unwrap();
        assert_eq!(two.as_uniform().unwrap(), SymOp::identity(2).scale(2.0));
        assert_eq!(two.certify_coercivity(&[[0.5, 0.5]]).unwrap(), 2.0);
        let c = Tensor4Field::isotropic(2, unit(), 1.3, 0.7);
        assert_eq!(c.sum(&Tensor4Field::zero(2, unit())).unwrap(), c);
        let s = c.sum(&Tensor4Field::isotropic(2, unit(), 0.2, 0.4)).unwrap();
        let expect = SymOp::isotropic(2, 1.5, 1.1);
        for a in probe_set(2) {
            let got = s.apply([0.3, 0.3], &a).unwrap();
            let want = expect.apply(&a);
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-14);
            }
        }
        assert!(i.sum(&Tensor4Field::identity(1, unit())).is_err());
    }

    #[test]
    fn nonsymmetric_coefficients_are_rejected() {
        let op = SymOp::from_coefficients(2, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let t = Tensor4Field::uniform(2, unit(), op);
        assert!(t.symmetry_defect(&[[0.5, 0.5]]).unwrap() > 1e-3);
        assert!(certify(&t, &[[0.5, 0.5]]).is_err());
    }

    #[test]
    fn piecewise_field_uses_regions() {
        let soft = SymOp::isotropic(2, 0.5, 0.5);
        let t = Tensor4Field::piecewise(
            2,
            unit(),
            vec![(Region { min: [0.0, 0.0], max: [0.5, 1.0] }, soft)],
            SymOp::isotropic(2, 1.0, 1.0),
        );
        assert_eq!(t.at([0.25, 0.5]).unwrap(), soft);
        let alpha = t.certify_coercivity(&[[0.25, 0.5], [0.75, 0.5]]).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn isotropic_is_symmetric(lambda in 0.0f64..5.0, mu in 0.01f64..5.0,
                                      a in proptest::array::uniform3(-1.0f64..1.0),
                                      b in proptest::array::uniform3(-1.0f64..1.0)) {
                let op = SymOp::isotropic(2, lambda, mu);
                let lhs = dot(&op.apply(&a), &b);
                let rhs = dot(&a, &op.apply(&b));
                let scale = op.norm() * dot(&a, &a).sqrt() * dot(&b, &b).sqrt();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
            }

            #[test]
            fn adding_coercive_viscosity_never_lowers_alpha(l1 in 0.0f64..3.0, m1 in 0.05f64..3.0,
                                                            l2 in 0.0f64..3.0, m2 in 0.05f64..3.0) {
                let c = Tensor4Field::isotropic(2, unit(), l1, m1);
                let v = Tensor4Field::isotropic(2, unit(), l2, m2);
                let pts = [[0.5, 0.5]];
                let ac = c.certify_coercivity(&pts).unwrap();
                let av = v.certify_coercivity(&pts).unwrap();
                let a = c.sum(&v).unwrap().certify_coercivity(&pts).unwrap();
                prop_assert!(a >= ac);
                prop_assert!(a >= ac + av - 1e-12);
            }
        }
    }
}
