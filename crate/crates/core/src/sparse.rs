//! Compressed-row sparse matrices and a Jacobi-preconditioned conjugate
//! gradient solver restricted to free dofs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// Sums duplicates. Insertion order of duplicates is preserved by the
    /// stable sort, so the result is deterministic.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; self.n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

impl CsrMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.vals[k] * y[self.cols[k]];
            }
            s += x[i] * r;
        }
        s
    }

    /// `a·self + b·other`; both must share the sparsity pattern.
    pub fn combine(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert!(self.row_ptr == other.row_ptr && self.cols == other.cols, "pattern mismatch");
        let vals = self.vals.iter().zip(&other.vals).map(|(x, y)| a * x + b * y).collect();
        CsrMatrix { n: self.n, row_ptr: self.row_ptr.clone(), cols: self.cols.clone(), vals }
    }

    /// Largest `|A_ij − A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings { tol: 1e-12, max_iter: 50_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b` on the dofs where `fixed` is false; entries of `x` at
/// fixed dofs are left untouched and treated as zero in the Krylov space,
/// so the caller must have moved their contribution into `b`. `x` on entry
/// is the initial guess.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], fixed: &[bool], cfg: CgSettings) -> Result<CgStats> {
    let n = a.size();
    let diag = a.diagonal();
    let free = |i: usize| !fixed[i];
    let mut xf: Vec<f64> = (0..n).map(|i| if free(i) { x[i] } else { 0.0 }).collect();
    let mut r = vec![0.0; n];
    a.matvec(&xf, &mut r);
    let mut bnorm = 0.0;
    for i in 0..n {
        r[i] = if free(i) { b[i] - r[i] } else { 0.0 };
        if free(i) {
            bnorm += b[i] * b[i];
        }
    }
    let bnorm = bnorm.sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        for i in 0..n {
            if free(i) {
                x[i] = 0.0;
            }
        }
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }
    let target = cfg.tol * bnorm;
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free(i) && diag[i] != 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    let mut res = norm(&r);
    let mut it = 0;
    while res > target {
        if it >= cfg.max_iter {
            return Err(Error::Solver { iterations: it, residual: res / bnorm });
        }
        a.matvec(&p, &mut q);
        for i in 0..n {
            if !free(i) {
                q[i] = 0.0;
            }
        }
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if pq <= 0.0 {
            return Err(Error::Solver { iterations: it, residual: res / bnorm });
        }
        let alpha = rz / pq;
        for i in 0..n {
            xf[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm(&r);
        it += 1;
    }
    for i in 0..n {
        if free(i) {
            x[i] = xf[i];
        }
    }
    Ok(CgStats { iterations: it, residual: res / bnorm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(1, 0, 1.0);
        b.add(0, 0, 1.0);
        b.add(1, 0, 2.5);
        let m = b.build();
        assert_eq!(m.get(1, 0), 3.5);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.mul(&[1.0, 1.0]), vec![1.0, 3.5]);
    }

    #[test]
    fn cg_solves_with_fixed_dofs() {
        let a = laplacian(20);
        let mut fixed = vec![false; 20];
        fixed[0] = true;
        fixed[19] = true;
        let exact: Vec<f64> = (0..20).map(|i| if fixed[i] { 0.0 } else { (i as f64).sin() }).collect();
        let b = a.mul(&exact);
        let mut x = vec![0.0; 20];
        let stats = pcg(&a, &b, &mut x, &fixed, CgSettings::default()).unwrap();
        assert!(stats.residual <= 1e-12);
        for i in 0..20 {
            assert!((x[i] - exact[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn iteration_cap_reports_solver_error() {
        let a = laplacian(50);
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let r = pcg(&a, &b, &mut x, &[false; 50], CgSettings { tol: 1e-14, max_iter: 3 });
        assert!(matches!(r, Err(Error::Solver { iterations: 3, .. })));
    }
}
