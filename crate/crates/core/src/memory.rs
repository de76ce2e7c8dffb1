//! The exponential memory convolution `h(t) = ∫₀ᵗ e^{τ−t} 𝕍 E(τ) dτ`,
//! stored element-wise and advanced by the trapezoid rule.

use crate::crack::BrokenSpace;
use crate::error::{Error, Result};
use crate::linalg::{to_mandel, Mandel};
use crate::mesh::Mesh;
use crate::tensor::{ExtendedTensor, SymOp, Tensor4Field};
use crate::trajectory::TrajectoryState;

/// Viscosity tensor evaluated at every element centroid.
pub fn element_ops(mesh: &Mesh, tensor: &Tensor4Field) -> Result<Vec<SymOp>> {
    if tensor.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: mesh.dim(), found: tensor.dim() });
    }
    mesh.elements().iter().map(|el| tensor.at(el.centroid)).collect()
}

/// `max_e ‖𝕍_e‖` over element operators.
pub fn ops_norm(ops: &[SymOp]) -> f64 {
    ops.iter().map(SymOp::norm).fold(0.0, f64::max)
}

fn apply_ops(ops: &[SymOp], strain: &[Mandel]) -> Vec<Mandel> {
    ops.iter().zip(strain).map(|(v, e)| v.apply(e)).collect()
}

/// L² norm of an element-wise constant symmetric field.
pub fn field_norm(mesh: &Mesh, h: &[Mandel]) -> f64 {
    h.iter()
        .zip(mesh.elements())
        .map(|(v, el)| el.measure * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryAccumulator {
    value: Vec<Mandel>,
    k: usize,
    dt: f64,
}

impl MemoryAccumulator {
    pub fn new(n_elements: usize, dt: f64) -> Result<MemoryAccumulator> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        Ok(MemoryAccumulator { value: vec![[0.0; 3]; n_elements], k: 0, dt })
    }

    /// Accumulator holding a known value at step `k`.
    pub fn with_value(value: Vec<Mandel>, k: usize, dt: f64) -> Result<MemoryAccumulator> {
        let mut acc = MemoryAccumulator::new(value.len(), dt)?;
        acc.value = value;
        acc.k = k;
        Ok(acc)
    }

    pub fn value(&self) -> &[Mandel] {
        &self.value
    }

    pub fn into_value(self) -> Vec<Mandel> {
        self.value
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.value.len() {
            return Err(Error::DimensionMismatch { expected: self.value.len(), found: n });
        }
        Ok(())
    }

    /// Everything in the next value except the newest-strain term:
    /// `e^{−Δt}(h_k + Δt/2·𝕍 E_k)`.
    pub fn predictor(&self, strain_old: &[Mandel], ops: &[SymOp]) -> Result<Vec<Mandel>> {
        self.check(strain_old.len())?;
        self.check(ops.len())?;
        let decay = (-self.dt).exp();
        let half = 0.5 * self.dt;
        Ok(self
            .value
            .iter()
            .zip(apply_ops(ops, strain_old))
            .map(|(h, ve)| std::array::from_fn(|i| decay * h[i] + half * decay * ve[i]))
            .collect())
    }

    /// Trapezoid step `h_{k+1} = e^{−Δt}h_k + Δt/2 (e^{−Δt}𝕍E_k + 𝕍E_{k+1})`.
    pub fn step(&mut self, strain_old: &[Mandel], strain_new: &[Mandel], ops: &[SymOp]) -> Result<()> {
        self.check(strain_new.len())?;
        let pred = self.predictor(strain_old, ops)?;
        let half = 0.5 * self.dt;
        for ((h, p), ve) in self.value.iter_mut().zip(pred).zip(apply_ops(ops, strain_new)) {
            *h = std::array::from_fn(|i| p[i] + half * ve[i]);
        }
        self.k += 1;
        Ok(())
    }

    /// `m` steps with zero strain input.
    pub fn decay(&mut self, m: usize) {
        let f = (-(m as f64) * self.dt).exp();
        for h in &mut self.value {
            h.iter_mut().for_each(|x| *x *= f);
        }
        self.k += m;
    }
}

/// Functional form of [`MemoryAccumulator::step`].
pub fn step_memory(
    acc: &MemoryAccumulator,
    strain_old: &[Mandel],
    strain_new: &[Mandel],
    ops: &[SymOp],
) -> Result<MemoryAccumulator> {
    let mut next = acc.clone();
    next.step(strain_old, strain_new, ops)?;
    Ok(next)
}

/// Composite-trapezoid quadrature of the convolution at `t_k = k·Δt`,
/// summed directly from the strain history.
pub fn eval_memory_direct(history: &[Vec<Mandel>], ops: &[SymOp], dt: f64, k: usize) -> Result<Vec<Mandel>> {
    if history.len() <= k {
        return Err(Error::Precondition(format!(
            "memory at step {k} needs {} strain fields, got {}",
            k + 1,
            history.len()
        )));
    }
    let n_el = ops.len();
    let mut out = vec![[0.0; 3]; n_el];
    if k == 0 {
        return Ok(out);
    }
    for (j, strain) in history.iter().enumerate().take(k + 1) {
        if strain.len() != n_el {
            return Err(Error::DimensionMismatch { expected: n_el, found: strain.len() });
        }
        let w = if j == 0 || j == k { 0.5 * dt } else { dt };
        let c = w * (-((k - j) as f64) * dt).exp();
        for (o, ve) in out.iter_mut().zip(apply_ops(ops, strain)) {
            for i in 0..3 {
                o[i] += c * ve[i];
            }
        }
    }
    Ok(out)
}

/// Memory at every node of a strain history, by recursion from zero.
pub fn memory_history(history: &[Vec<Mandel>], ops: &[SymOp], dt: f64) -> Result<Vec<Vec<Mandel>>> {
    let mut acc = MemoryAccumulator::new(ops.len(), dt)?;
    let mut out = Vec::with_capacity(history.len());
    out.push(acc.value().to_vec());
    for w in history.windows(2) {
        acc.step(&w[0], &w[1], ops)?;
        out.push(acc.value().to_vec());
    }
    Ok(out)
}

/// Symmetric parts of the gradient slot of a trajectory.
pub fn trajectory_strains(traj: &TrajectoryState) -> Vec<Vec<Mandel>> {
    let d = traj.family.mesh().dim();
    traj.nodes
        .iter()
        .map(|n| n.grad.iter().map(|g| to_mandel(d, g)).collect())
        .collect()
}

/// `𝒯w`: the convolution applied to the full gradient slot through the
/// extended viscosity tensor, restarted from zero at the trajectory's `t0`.
pub fn apply_t(w: &TrajectoryState, viscosity: &ExtendedTensor) -> Result<Vec<Vec<Mandel>>> {
    let ops = element_ops(w.family.mesh(), &viscosity.base)?;
    memory_history(&trajectory_strains(w), &ops, w.dt)
}

/// Both sides of the `L∞` and derivative bounds for the memory of a
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryBounds {
    pub lhs_inf: f64,
    pub rhs_inf: f64,
    pub lhs_dot: f64,
    pub rhs_dot: f64,
}

impl MemoryBounds {
    pub fn holds(&self) -> bool {
        let slack = 1.0 + 1e-8;
        self.lhs_inf <= self.rhs_inf * slack + 1e-300 && self.lhs_dot <= self.rhs_dot * slack + 1e-300
    }
}

/// Which norm of the input the bounds are stated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundNorm {
    /// `‖u‖_{𝒱∞}`: right sides `T‖𝕍‖` and `(T^{1/2} + T^{3/2})‖𝕍‖`.
    VInf,
    /// `‖w‖_𝒲`: right sides `T^{1/2}‖𝕍‖` and `(1 + T)‖𝕍‖`.
    W,
}

/// Measures `max_k ‖h_k‖` and the left-Riemann L² norm of the difference
/// quotients `(h_{k+1} − h_k)/Δt`, against the matching right sides.
pub fn memory_norm_bounds(traj: &TrajectoryState, viscosity: &Tensor4Field, norm: BoundNorm) -> Result<MemoryBounds> {
    let mesh = traj.family.mesh();
    let ops = element_ops(mesh, viscosity)?;
    let h = memory_history(&trajectory_strains(traj), &ops, traj.dt)?;
    let lhs_inf = h.iter().map(|f| field_norm(mesh, f)).fold(0.0, f64::max);
    let dot_sq: f64 = h
        .windows(2)
        .map(|w| {
            let diff: Vec<Mandel> = w[1]
                .iter()
                .zip(&w[0])
                .map(|(a, b)| std::array::from_fn(|i| (a[i] - b[i]) / traj.dt))
                .collect();
            traj.dt * field_norm(mesh, &diff).powi(2)
        })
        .sum();
    let t = traj.horizon();
    let vn = ops_norm(&ops);
    let (rhs_inf, rhs_dot) = match norm {
        BoundNorm::VInf => {
            let n = traj.v_inf_norm();
            (t * vn * n, (t.sqrt() + t.powf(1.5)) * vn * n)
        }
        BoundNorm::W => {
            let n = traj.w_norm();
            (t.sqrt() * vn * n, (1.0 + t) * vn * n)
        }
    };
    Ok(MemoryBounds { lhs_inf, rhs_inf, lhs_dot: dot_sq.sqrt(), rhs_dot })
}

/// Memory contribution to the load vector, `(h, Eφ_i)`.
pub fn memory_load(space: &BrokenSpace, h: &[Mandel]) -> Vec<f64> {
    crate::assembly::divergence_load(space, h)
}
