//! The full memory system, solved monolithically and as the fixed point of
//! `𝒢(w) = elastodynamic solution with matrix load F + 𝒯w`.

use crate::elastodynamics::{energy_audit_with, solve_elastodynamics, EnergyReport, Integrator, RunStart};
use crate::error::{Error, Result};
use crate::linalg::Mandel;
use crate::load::LoadData;
use crate::memory::{element_ops, memory_history, trajectory_strains};
use crate::scenario::{step_count, Scenario};
use crate::tensor::{SymOp, Tensor4Field};
use crate::trajectory::{discrete_wnorm, TrajectoryState};

/// Monolithic stepping of the memory system. A vanishing viscosity falls
/// through to the memory-free solver with `ℂ`.
pub fn solve_monolithic(sc: &Scenario, dt: f64) -> Result<TrajectoryState> {
    if sc.viscosity_is_zero() {
        return solve_elastodynamics(sc, &sc.elasticity, &sc.data, dt);
    }
    let steps = sc.steps(dt)?;
    Ok(Integrator::monolithic(sc, dt)?.run(0.0, steps, None, None)?.traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialIterate {
    /// Elastodynamic solution with tensor `ℂ + 𝕍` and the memory ignored.
    Elastodynamic,
    Zero,
    /// Seeded random trajectory (see [`TrajectoryState::random_smooth`]).
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointConfig {
    /// Relative tolerance on the `𝒲` distance of successive iterates.
    pub tol: f64,
    /// Absolute floor added to the relative tolerance.
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Fixed number of subintervals; `None` chooses it adaptively.
    pub k: Option<usize>,
    /// Largest subinterval count tried by the adaptive policy.
    pub max_k: usize,
    /// Ratio at which a subinterval is declared too long.
    pub ratio_limit: f64,
    pub initial: InitialIterate,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            tol: 1e-10,
            abs_tol: 1e-13,
            max_iter: 200,
            k: None,
            max_k: 64,
            ratio_limit: 0.9,
            initial: InitialIterate::Elastodynamic,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.abs_tol >= 0.0) {
            return Err(Error::Precondition(format!("fixed-point tolerance must be positive, got {}", self.tol)));
        }
        if self.k == Some(0) || self.max_iter == 0 || self.max_k == 0 {
            return Err(Error::Precondition("subinterval count and iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContractionReport {
    /// `‖w_{m+1} − w_m‖_𝒲` per iteration, one list per subinterval.
    pub diffs: Vec<Vec<f64>>,
    /// Largest quotient of successive differences.
    pub ratio: f64,
    /// Subinterval end points `0 = T_0 < … < T_k = T`.
    pub boundaries: Vec<f64>,
    /// Picard iterations per subinterval.
    pub iterations: Vec<usize>,
    /// Subinterval counts that were abandoned before the final one.
    pub abandoned: Vec<usize>,
}

impl ContractionReport {
    pub fn subintervals(&self) -> usize {
        self.iterations.len()
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Shared state for repeated applications of `𝒢` on one scenario.
pub struct FixedPointMap<'a> {
    sc: &'a Scenario,
    integ: Integrator<'a>,
    visc: Vec<SymOp>,
    total: Tensor4Field,
}

enum Outcome {
    Converged(TrajectoryState, Vec<f64>),
    Stalled { iterations: usize, ratio: f64 },
}

fn max_ratio(diffs: &[f64]) -> f64 {
    diffs
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max)
}

impl<'a> FixedPointMap<'a> {
    pub fn new(sc: &'a Scenario, data: &'a LoadData, dt: f64) -> Result<FixedPointMap<'a>> {
        let total = sc.total_tensor()?;
        let integ = Integrator::elastic(sc, &total, data, dt)?;
        let visc = element_ops(sc.family.mesh(), &sc.viscosity)?;
        Ok(FixedPointMap { sc, integ, visc, total })
    }

    pub fn dt(&self) -> f64 {
        self.integ.dt()
    }

    /// `𝒯w` restarted at the first node of `w`, plus the decayed hand-off.
    pub fn memory_load(&self, w: &TrajectoryState, handoff: Option<&[Mandel]>) -> Result<Vec<Vec<Mandel>>> {
        let mut h = memory_history(&trajectory_strains(w), &self.visc, w.dt)?;
        if let Some(h0) = handoff {
            for (k, field) in h.iter_mut().enumerate() {
                let f = (-(k as f64) * w.dt).exp();
                for (a, b) in field.iter_mut().zip(h0) {
                    for i in 0..3 {
                        a[i] += f * b[i];
                    }
                }
            }
        }
        Ok(h)
    }

    /// One application of `𝒢` on the grid of `w`. The hand-off memory is
    /// passed to the stepper, which adds it to the load with its decay.
    pub fn apply(&self, w: &TrajectoryState, start: Option<&RunStart>) -> Result<TrajectoryState> {
        let extra = self.memory_load(w, None)?;
        Ok(self.integ.run(w.t0, w.steps(), start, Some(&extra))?.traj)
    }

    fn initial(&self, policy: InitialIterate, t0: f64, steps: usize, start: Option<&RunStart>) -> Result<TrajectoryState> {
        let fam = self.sc.family.clone();
        Ok(match policy {
            InitialIterate::Elastodynamic => self.integ.run(t0, steps, start, None)?.traj,
            InitialIterate::Zero => TrajectoryState::zero(fam, &self.sc.schedule, t0, self.dt(), steps),
            InitialIterate::Random(seed) => {
                TrajectoryState::random_smooth(fam, &self.sc.schedule, t0, self.dt(), steps, seed)
            }
        })
    }

    fn picard(&self, cfg: &FixedPointConfig, t0: f64, steps: usize, start: Option<&RunStart>, abort_on_ratio: bool) -> Result<Outcome> {
        let mut w = self.initial(cfg.initial, t0, steps, start)?;
        let mut diffs = Vec::new();
        for m in 1..=cfg.max_iter {
            let z = self.apply(&w, start)?;
            let diff = discrete_wnorm(&z, &w)?;
            diffs.push(diff);
            if diff <= cfg.tol * z.w_norm() + cfg.abs_tol {
                return Ok(Outcome::Converged(z, diffs));
            }
            let ratio = max_ratio(&diffs[diffs.len().saturating_sub(2)..]);
            if abort_on_ratio && m >= 2 && ratio >= cfg.ratio_limit {
                return Ok(Outcome::Stalled { iterations: m, ratio });
            }
            w = z;
        }
        Ok(Outcome::Stalled { iterations: cfg.max_iter, ratio: max_ratio(&diffs) })
    }

    /// Picard iteration on `[0, T]` split into `k` subintervals, chained by
    /// carrying the terminal state and the compressed memory.
    fn solve_split(&self, cfg: &FixedPointConfig, steps: usize, k: usize, adaptive: bool) -> Result<std::result::Result<(TrajectoryState, ContractionReport), (usize, f64)>> {
        let dt = self.dt();
        let cuts: Vec<usize> = (0..=k).map(|i| (i * steps + k / 2) / k).collect();
        let mut report = ContractionReport { boundaries: cuts.iter().map(|&c| c as f64 * dt).collect(), ..Default::default() };
        let mut pieces = Vec::with_capacity(k);
        let mut start: Option<RunStart> = None;
        for i in 0..k {
            let t0 = cuts[i] as f64 * dt;
            let n = cuts[i + 1] - cuts[i];
            match self.picard(cfg, t0, n, start.as_ref(), adaptive)? {
                Outcome::Converged(z, diffs) => {
                    let handoff = start.as_ref().map(|s| s.memory.as_slice());
                    let memory = self.memory_load(&z, handoff)?.pop().expect("nonempty history");
                    report.iterations.push(diffs.len());
                    report.diffs.push(diffs);
                    start = Some(RunStart { node: z.last().clone(), memory });
                    pieces.push(z);
                }
                Outcome::Stalled { iterations, ratio } => return Ok(Err((iterations, ratio))),
            }
        }
        report.ratio = report.diffs.iter().map(|d| max_ratio(d)).fold(0.0, f64::max);
        Ok(Ok((TrajectoryState::concat(pieces)?, report)))
    }

    pub fn solve(&self, cfg: &FixedPointConfig) -> Result<(TrajectoryState, ContractionReport)> {
        cfg.validate()?;
        let steps = self.sc.steps(self.dt())?;
        let adaptive = cfg.k.is_none();
        let mut k = cfg.k.unwrap_or(1).min(steps);
        let mut abandoned = Vec::new();
        loop {
            match self.solve_split(cfg, steps, k, adaptive)? {
                Ok((traj, mut report)) => {
                    report.abandoned = abandoned;
                    return Ok((traj, report));
                }
                Err((iterations, ratio)) => {
                    if !adaptive || 2 * k > cfg.max_k.min(steps) {
                        return Err(Error::Contraction { iterations, ratio, subintervals: k });
                    }
                    abandoned.push(k);
                    k *= 2;
                }
            }
        }
    }

    /// Energy balance of the inner solve at the fixed point `u`: the
    /// elastodynamic problem with matrix load `F + 𝒯u`.
    pub fn energy_audit(&self, u: &TrajectoryState) -> Result<EnergyReport> {
        let extra = self.memory_load(u, None)?;
        let inner = self.integ.run(u.t0, u.steps(), None, Some(&extra))?.traj;
        energy_audit_with(&inner, &self.total, &self.sc.data, Some(&extra))
    }
}

/// `𝒢(w)` on `[0, T]` for a trajectory starting at `t = 0`.
pub fn apply_g(sc: &Scenario, w: &TrajectoryState, dt: f64) -> Result<TrajectoryState> {
    if w.t0 != 0.0 || (w.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::Precondition("probe trajectory must start at t = 0 on the solver grid".into()));
    }
    FixedPointMap::new(sc, &sc.data, dt)?.apply(w, None)
}

pub fn solve_fixedpoint(sc: &Scenario, dt: f64, cfg: &FixedPointConfig) -> Result<(TrajectoryState, ContractionReport)> {
    FixedPointMap::new(sc, &sc.data, dt)?.solve(cfg)
}

/// One row of the contraction table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSample {
    pub horizon: f64,
    pub rho: f64,
    /// `‖w₁ − w₂‖_𝒲`.
    pub input_distance: f64,
    pub steps: usize,
}

/// `ρ(T) = ‖𝒢(w₁) − 𝒢(w₂)‖_𝒲 / ‖w₁ − w₂‖_𝒲` for two seeded random
/// trajectories on each horizon.
pub fn measure_contraction(sc: &Scenario, dt: f64, horizons: &[f64], seed: u64) -> Result<Vec<ContractionSample>> {
    let mut out = Vec::with_capacity(horizons.len());
    for &t in horizons {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("horizon must be positive, got {t}")));
        }
        let steps = step_count(t, dt)?;
        let s = sc.with_horizon(t);
        let map = FixedPointMap::new(&s, &s.data, dt)?;
        let w1 = TrajectoryState::random_smooth(s.family.clone(), &s.schedule, 0.0, dt, steps, seed);
        let w2 = TrajectoryState::random_smooth(s.family.clone(), &s.schedule, 0.0, dt, steps, seed.wrapping_add(1));
        let input_distance = discrete_wnorm(&w1, &w2)?;
        if input_distance == 0.0 {
            return Err(Error::Precondition("probe trajectories coincide".into()));
        }
        let g1 = map.apply(&w1, None)?;
        let g2 = map.apply(&w2, None)?;
        out.push(ContractionSample { horizon: t, rho: discrete_wnorm(&g1, &g2)? / input_distance, input_distance, steps });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    /// `‖u‖_𝒲` of the zero-data solve started from a random iterate.
    pub zero_data_norm: f64,
    pub zero_data_iterations: usize,
    /// `𝒲` distance between two solves of the scenario from different
    /// initial iterates.
    pub repeat_distance: f64,
    pub solution_norm: f64,
}

pub fn uniqueness_probe(sc: &Scenario, dt: f64, seed: u64, cfg: &FixedPointConfig) -> Result<UniquenessReport> {
    let zero = sc.with_data(LoadData::zero());
    let random = FixedPointConfig { initial: InitialIterate::Random(seed), ..cfg.clone() };
    let (u0, rep0) = solve_fixedpoint(&zero, dt, &random)?;
    let (a, _) = solve_fixedpoint(sc, dt, cfg)?;
    let (b, _) = solve_fixedpoint(sc, dt, &random)?;
    Ok(UniquenessReport {
        zero_data_norm: u0.w_norm(),
        zero_data_iterations: rep0.total_iterations(),
        repeat_distance: discrete_wnorm(&a, &b)?,
        solution_norm: a.w_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::{CrackPath, Schedule, SpaceFamily};
    use crate::domain::{Domain, Side};
    use crate::expr::Expr;
    use crate::scenario::{growing_crack, H15Policy};
    use crate::sparse::CgSettings;
    use std::sync::Arc;

    fn small() -> Scenario {
        growing_crack(0.25).unwrap().with_horizon(0.5)
    }

    #[test]
    fn zero_viscosity_matches_elastodynamics_bitwise() {
        let mut sc = small();
        sc.viscosity = Tensor4Field::zero(2, sc.domain().bounds);
        let a = solve_monolithic(&sc, 0.05).unwrap();
        let b = solve_elastodynamics(&sc, &sc.elasticity, &sc.data, 0.05).unwrap();
        assert!(a.nodes == b.nodes);
        let (c, rep) = solve_fixedpoint(&sc, 0.05, &FixedPointConfig::default()).unwrap();
        assert_eq!(rep.total_iterations(), 1);
        assert!(c.nodes == b.nodes);
        let w = TrajectoryState::random_smooth(sc.family.clone(), &sc.schedule, 0.0, 0.05, 10, 9);
        assert!(apply_g(&sc, &w, 0.05).unwrap().nodes == b.nodes);
    }

    #[test]
    fn zero_data_is_zero() {
        let sc = small().with_data(LoadData::zero());
        let m = solve_monolithic(&sc, 0.05).unwrap();
        assert_eq!(m.w_norm(), 0.0);
        let (u, rep) = solve_fixedpoint(&sc, 0.05, &FixedPointConfig::default()).unwrap();
        assert_eq!(u.w_norm(), 0.0);
        assert_eq!(rep.total_iterations(), 1);
    }

    #[test]
    fn fixed_point_matches_monolithic() {
        let sc = growing_crack(0.25).unwrap();
        let m = solve_monolithic(&sc, 0.05).unwrap();
        let (u, rep) = solve_fixedpoint(&sc, 0.05, &FixedPointConfig::default()).unwrap();
        assert!(discrete_wnorm(&u, &m).unwrap() <= 1e-6 * m.w_norm(), "{rep:?}");
        let g = apply_g(&sc, &m, 0.05).unwrap();
        assert!(discrete_wnorm(&g, &m).unwrap() <= 1e-8 * m.w_norm());
    }

    #[test]
    fn subinterval_counts_agree() {
        let sc = growing_crack(0.25).unwrap();
        let one = FixedPointConfig { k: Some(1), ..Default::default() };
        let four = FixedPointConfig { k: Some(4), ..Default::default() };
        let (a, ra) = solve_fixedpoint(&sc, 0.05, &one).unwrap();
        let (b, rb) = solve_fixedpoint(&sc, 0.05, &four).unwrap();
        assert_eq!(rb.boundaries.len(), 5);
        assert!(discrete_wnorm(&a, &b).unwrap() <= 1e-8 * a.w_norm());
        assert!(rb.iterations.iter().all(|&i| i <= ra.iterations[0]));
    }

    #[test]
    fn contraction_shrinks_with_horizon() {
        let sc = growing_crack(0.25).unwrap();
        let rows = measure_contraction(&sc, 0.025, &[0.25, 0.5], 11).unwrap();
        assert!(rows[0].rho <= 0.75 * rows[1].rho, "{rows:?}");
        let mut z = sc.clone();
        z.viscosity = Tensor4Field::zero(2, sc.domain().bounds);
        assert!(measure_contraction(&z, 0.025, &[0.25], 11).unwrap()[0].rho == 0.0);
    }

    #[test]
    fn uniqueness_from_random_start() {
        let sc = small();
        let r = uniqueness_probe(&sc, 0.05, 5, &FixedPointConfig::default()).unwrap();
        assert!(r.zero_data_norm <= 1e-8, "{r:?}");
        assert!(r.repeat_distance <= 1e-8, "{r:?}");
    }

    #[test]
    fn viscous_energy_balance_of_inner_solve() {
        let sc = small();
        let mut data = sc.data.clone();
        data.u0 = [Expr::parse("x*(1-x)*y*(1-y)").unwrap(), Expr::zero()];
        let sc = sc.with_data(data);
        let map = FixedPointMap::new(&sc, &sc.data, 0.05).unwrap();
        let (u, _) = map.solve(&FixedPointConfig::default()).unwrap();
        let e = map.energy_audit(&u).unwrap();
        assert!(e.holds(), "{} > {}", e.max_slack(), e.tol);
    }

    /// Single element under a constant applied stress, with inertia made
    /// negligible by a long horizon: the strain follows the scalar law
    /// `(c+v) ε − ∫ e^{τ−t} v ε = σ`, i.e. `ε̇ = −(c/(c+v)) ε + σ/(c+v)`
    /// after differentiating (Maxwell-type relaxation towards `σ/c`).
    #[test]
    fn quasi_static_relaxation() {
        let domain = Domain::interval(0.0, 1.0, &[Side::Left]).unwrap();
        let path = CrackPath::new(1, vec![[0.5, 0.0]]).unwrap();
        let family = Arc::new(SpaceFamily::build(&domain, &path, 0.5).unwrap());
        let b = domain.bounds;
        let (c, v, sigma) = (2500.0, 2500.0, 1.0);
        let mut data = LoadData::zero();
        data.stress = [Expr::constant(sigma), Expr::zero(), Expr::zero()];
        // start on the slow manifold: instantaneous response and its rate
        let eps_dot0 = (sigma - c * sigma / (c + v)) / (c + v);
        data.u0 = [Expr::parse(&format!("{}*x", sigma / (c + v))).unwrap(), Expr::zero()];
        data.u1 = [Expr::parse(&format!("{eps_dot0}*x")).unwrap(), Expr::zero()];
        let sc = Scenario {
            family,
            schedule: Schedule::constant(0.0),
            elasticity: Tensor4Field::uniform(1, b, SymOp::identity(1).scale(c)),
            viscosity: Tensor4Field::uniform(1, b, SymOp::identity(1).scale(v)),
            data,
            t_end: 3.0,
            cg: CgSettings::default(),
            h15: H15Policy::Warn,
        };
        let tr = solve_monolithic(&sc, 0.001).unwrap();
        let rate = c / (c + v);
        let eps0 = sigma / (c + v);
        let eps_inf = sigma / c;
        let mut worst: f64 = 0.0;
        for (k, n) in tr.nodes.iter().enumerate() {
            let t = tr.time(k);
            let exact = eps_inf + (eps0 - eps_inf) * (-rate * t).exp();
            worst = worst.max((n.grad[0][0] - exact).abs() / eps_inf);
        }
        assert!(worst < 1e-4, "{worst}");
    }
}
