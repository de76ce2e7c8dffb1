//! Small dense helpers for d×d matrices (d ≤ 2) and their Mandel vectors.
//!
//! Full matrices are stored row-major in `[f64; 4]`; for d = 1 only entry 0
//! is used. Symmetric matrices are written in the orthonormal basis
//! `e11, e22, (e12 + e21)/√2`, so the Euclidean product of two Mandel vectors
//! equals the Frobenius product `A : B`.

pub type FullMatrix = [f64; 4];
pub type Mandel = [f64; 3];

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

pub fn n_sym(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

pub fn identity(dim: usize) -> FullMatrix {
    match dim {
        1 => [1.0, 0.0, 0.0, 0.0],
        _ => [1.0, 0.0, 0.0, 1.0],
    }
}

pub fn sym_part(dim: usize, a: &FullMatrix) -> FullMatrix {
    match dim {
        1 => [a[0], 0.0, 0.0, 0.0],
        _ => {
            let off = 0.5 * (a[1] + a[2]);
            [a[0], off, off, a[3]]
        }
    }
}

/// Mandel vector of the symmetric part of `a`.
pub fn to_mandel(dim: usize, a: &FullMatrix) -> Mandel {
    match dim {
        1 => [a[0], 0.0, 0.0],
        _ => [a[0], a[3], SQRT2 * 0.5 * (a[1] + a[2])],
    }
}

pub fn from_mandel(dim: usize, m: &Mandel) -> FullMatrix {
    match dim {
        1 => [m[0], 0.0, 0.0, 0.0],
        _ => {
            let off = m[2] / SQRT2;
            [m[0], off, off, m[1]]
        }
    }
}

pub fn frob(dim: usize, a: &FullMatrix, b: &FullMatrix) -> f64 {
    let n = dim * dim;
    if dim == 1 {
        a[0] * b[0]
    } else {
        (0..n).map(|i| a[i] * b[i]).sum()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
