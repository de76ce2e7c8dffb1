//! Discrete Korn constant: the largest `λ` with `‖Dv‖² = λ (‖v‖² + ‖Ev‖²)`
//! on a broken space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble_gradient_gram, assemble_stiffness_ops};
use crate::crack::BrokenSpace;
use crate::error::{Error, Result};
use crate::sparse::{pcg, CgSettings, CsrMatrix};
use crate::tensor::SymOp;

pub const KORN_SEED: u64 = 7;
pub const KORN_MAX_ITER: usize = 10_000;
pub const KORN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KornEstimate {
    /// Reported constant, `max(1, λ_max)`.
    pub k: f64,
    /// Largest generalized eigenvalue of the discrete pencil.
    pub lambda_max: f64,
    pub iterations: usize,
}

/// The pencil `(A_D, M + A_E)` on the whole space (no Dirichlet mask).
pub fn korn_pencil(space: &BrokenSpace) -> (CsrMatrix, CsrMatrix) {
    let n_el = space.mesh().n_elements();
    let a_d = assemble_gradient_gram(space);
    let a_e = assemble_stiffness_ops(space, &vec![SymOp::identity(space.dim()); n_el]);
    let b = space.mass().combine(1.0, &a_e, 1.0);
    (a_d, b)
}

/// Power iteration on `(M + A_E)⁻¹ A_D` from a fixed-seed start vector.
///
/// Any `v` with `Dv ≠ 0` and `‖Ev‖ = ‖Dv‖` gives a Rayleigh quotient below 1
/// only because of the `‖v‖²` term, while the continuum constant is at least 1,
/// so the reported value is clamped below by 1.
pub fn estimate_korn_constant(space: &BrokenSpace) -> Result<KornEstimate> {
    let (a, b) = korn_pencil(space);
    let n = a.size();
    if b.diagonal().iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Assembly("singular Gram matrix in Korn estimate".into()));
    }
    let free = vec![false; n];
    let cg = CgSettings { tol: 1e-12, max_iter: 50_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(KORN_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let normalize = |x: &mut Vec<f64>| {
        let s = b.form(x, x).sqrt();
        x.iter_mut().for_each(|v| *v /= s);
    };
    normalize(&mut x);
    let mut mu = a.form(&x, &x);
    let mut y = x.iter().map(|v| v * mu).collect::<Vec<_>>();
    for it in 1..=KORN_MAX_ITER {
        let rhs = a.mul(&x);
        pcg(&b, &rhs, &mut y, &free, cg)?;
        let mut next = y.clone();
        normalize(&mut next);
        let mu_next = a.form(&next, &next);
        let change = (mu_next - mu).abs();
        x = next;
        mu = mu_next;
        // warm start for the next solve: B⁻¹A x ≈ μ x
        y = x.iter().map(|v| v * mu).collect();
        if change <= KORN_TOL * mu.abs() {
            return Ok(KornEstimate { k: mu.max(1.0), lambda_max: mu, iterations: it });
        }
    }
    Err(Error::Solver { iterations: KORN_MAX_ITER, residual: f64::NAN })
}

/// `‖Dv‖² / (‖v‖² + ‖Ev‖²)` for a dof vector.
pub fn korn_quotient(space: &BrokenSpace, v: &[f64]) -> f64 {
    let (a, b) = korn_pencil(space);
    a.form(v, v) / b.form(v, v)
}
