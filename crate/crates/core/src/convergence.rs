//! Sequences of perturbed scenarios converging to a base scenario, and the
//! measured convergence of their solutions and fixed-point maps.

use crate::error::{Error, Result};
use crate::korn::{estimate_korn_constant, KornEstimate};
use crate::scenario::Scenario;
use crate::tensor::{certify, Tensor4Field};
use crate::trajectory::{discrete_wnorm, sup_product_distance, TrajectoryState};
use crate::viscoelastic::{solve_fixedpoint, FixedPointConfig, FixedPointMap};

/// Perturbation sizes for member `n`: tip offset `δ₀/n`, tensor and data
/// perturbation `ε₀/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayLaw {
    pub delta0: f64,
    pub eps0: f64,
}

impl Default for DecayLaw {
    fn default() -> Self {
        DecayLaw { delta0: 0.1, eps0: 1.0 }
    }
}

impl DecayLaw {
    pub const NONE: DecayLaw = DecayLaw { delta0: 0.0, eps0: 0.0 };

    pub fn delta(&self, n: usize) -> f64 {
        self.delta0 / n as f64
    }

    pub fn eps(&self, n: usize) -> f64 {
        self.eps0 / n as f64
    }
}

pub const DEFAULT_NS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone)]
pub struct Member {
    pub n: usize,
    pub delta: f64,
    pub eps: f64,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub struct ScenarioSequence {
    pub base: Scenario,
    pub law: DecayLaw,
    pub members: Vec<Member>,
    /// Common coercivity constant over the base and every member.
    pub alpha0: f64,
    /// Common bound on the tensor norms.
    pub m0: f64,
}

/// Fixed symmetric perturbation direction used for both tensors.
pub fn perturbation(base: &Scenario) -> Tensor4Field {
    Tensor4Field::isotropic(base.dim(), base.domain().bounds, 0.1, -0.1)
}

/// Members `n ∈ ns` with shifted tip schedules, tensors `ℂ + ε_n P`,
/// `𝕍 + ε_n P` and data scaled by `1 + ε_n`. Every member is certified.
pub fn build_sequence(base: &Scenario, law: DecayLaw, ns: &[usize]) -> Result<ScenarioSequence> {
    if ns.len() < 3 {
        return Err(Error::Precondition(format!("a sequence needs at least 3 members, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
        return Err(Error::Ordering("member indices must be positive and increasing".into()));
    }
    let pts = base.sample_points();
    let p = perturbation(base);
    let mut alpha0 = f64::INFINITY;
    let mut m0: f64 = 0.0;
    let mut fold = |sc: &Scenario| -> Result<()> {
        let c = certify(&sc.elasticity, &pts)?;
        alpha0 = alpha0.min(c.alpha0);
        m0 = m0.max(c.m0);
        if !sc.viscosity.is_zero_on(&pts) {
            let v = certify(&sc.viscosity, &pts)?;
            alpha0 = alpha0.min(v.alpha0);
            m0 = m0.max(v.m0);
        }
        Ok(())
    };
    fold(base)?;
    let mut members = Vec::with_capacity(ns.len());
    for &n in ns {
        let delta = law.delta(n);
        let eps = law.eps(n);
        let member = || -> Result<Scenario> {
            let mut sc = base.clone();
            sc.schedule = base.schedule.shifted(delta);
            if eps != 0.0 {
                sc.elasticity = base.elasticity.sum(&p.scaled(eps))?;
                if !base.viscosity_is_zero() {
                    sc.viscosity = base.viscosity.sum(&p.scaled(eps))?;
                }
                sc.data = base.data.scaled(1.0 + eps);
            }
            let len = sc.family.path().length();
            if sc.schedule.tip(0.0) > len {
                return Err(Error::Geometry(format!("shifted tip {} leaves the path", sc.schedule.tip(0.0))));
            }
            Ok(sc)
        };
        let sc = member().map_err(|e| Error::Member { index: n, source: Box::new(e) })?;
        fold(&sc).map_err(|e| Error::Member { index: n, source: Box::new(e) })?;
        members.push(Member { n, delta, eps, scenario: sc });
    }
    Ok(ScenarioSequence { base: base.clone(), law, members, alpha0, m0 })
}

impl ScenarioSequence {
    /// Korn constant shared by all members: every member lives on the same
    /// space family, so the fully open space bounds them all.
    pub fn korn(&self) -> Result<KornEstimate> {
        estimate_korn_constant(self.base.family.fully_open())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `max_k ‖(u^n, Du^n, u̇^n)(t_k) − (u, Du, u̇)(t_k)‖`.
    pub sup_dist: f64,
    pub w_dist: f64,
    /// `max_k (‖u^n‖ + ‖Du^n‖ + ‖u̇^n‖)`.
    pub uniform_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub base_bound: f64,
    /// `max_k ‖(u, Du, u̇)(t_k)‖` of the limit solution.
    pub base_sup_norm: f64,
    /// Largest uniform bound over all members.
    pub c: f64,
}

impl ConvergenceReport {
    pub fn nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_dist <= w[0].sup_dist)
    }
}

fn solve_all(scenarios: &[&Scenario], dt: f64, cfg: &FixedPointConfig, threads: usize) -> Vec<Result<TrajectoryState>> {
    let solve = |sc: &Scenario| solve_fixedpoint(sc, dt, cfg).map(|(u, _)| u);
    if threads <= 1 {
        return scenarios.iter().map(|sc| solve(sc)).collect();
    }
    let mut out = Vec::with_capacity(scenarios.len());
    for chunk in scenarios.chunks(threads) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|sc| s.spawn(|| solve(sc))).collect();
            out.extend(handles.into_iter().map(|h| h.join().expect("solver thread panicked")));
        });
    }
    out
}

/// Solves the limit and every member with the fixed-point solver and
/// compares them node by node in the common broken spaces. Members are
/// solved concurrently, one thread each.
pub fn run_convergence(seq: &ScenarioSequence, dt: f64, cfg: &FixedPointConfig) -> Result<ConvergenceReport> {
    run_convergence_with_threads(seq, dt, cfg, seq.members.len() + 1)
}

/// As [`run_convergence`] with at most `threads` concurrent solves. The
/// result does not depend on `threads`.
pub fn run_convergence_with_threads(seq: &ScenarioSequence, dt: f64, cfg: &FixedPointConfig, threads: usize) -> Result<ConvergenceReport> {
    let mut all: Vec<&Scenario> = vec![&seq.base];
    all.extend(seq.members.iter().map(|m| &m.scenario));
    let mut sols = solve_all(&all, dt, cfg, threads).into_iter();
    let base = sols.next().expect("limit solve")?;
    let zero = base.scaled(0.0);
    let base_sup_norm = sup_product_distance(&base, &zero)?;
    let base_bound = base.uniform_bound();
    let mut rows = Vec::with_capacity(seq.members.len());
    for (m, sol) in seq.members.iter().zip(sols) {
        let u = sol.map_err(|e| Error::Member { index: m.n, source: Box::new(e) })?;
        rows.push(ConvergenceRow {
            n: m.n,
            sup_dist: sup_product_distance(&u, &base)?,
            w_dist: discrete_wnorm(&u, &base)?,
            uniform_bound: u.uniform_bound(),
        });
    }
    let c = rows.iter().map(|r| r.uniform_bound).fold(base_bound, f64::max);
    Ok(ConvergenceReport { rows, base_bound, base_sup_norm, c })
}

/// `‖𝒢^n(w) − 𝒢(w)‖_𝒲` for every member on one probe trajectory.
pub fn fixedpoint_convergence_check(seq: &ScenarioSequence, dt: f64, probe: &TrajectoryState) -> Result<Vec<(usize, f64)>> {
    if probe.t0 != 0.0 || (probe.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::Precondition("probe trajectory must start at t = 0 on the solver grid".into()));
    }
    let limit = FixedPointMap::new(&seq.base, &seq.base.data, dt)?.apply(probe, None)?;
    seq.members
        .iter()
        .map(|m| {
            let g = FixedPointMap::new(&m.scenario, &m.scenario.data, dt)
                .and_then(|map| map.apply(probe, None))
                .map_err(|e| Error::Member { index: m.n, source: Box::new(e) })?;
            Ok((m.n, discrete_wnorm(&g, &limit)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::growing_crack;

    fn base() -> Scenario {
        growing_crack(0.125).unwrap().with_horizon(0.5)
    }

    #[test]
    fn zero_law_reproduces_base() {
        let b = base();
        let seq = build_sequence(&b, DecayLaw::NONE, &DEFAULT_NS).unwrap();
        let r = run_convergence(&seq, 0.05, &FixedPointConfig::default()).unwrap();
        let tol = 2.0 * 1e-10 * r.base_sup_norm.max(1.0);
        assert!(r.rows.iter().all(|row| row.sup_dist <= tol), "{r:?}");
    }

    #[test]
    fn offsets_follow_the_law() {
        let b = base();
        let seq = build_sequence(&b, DecayLaw::default(), &[1, 2, 10]).unwrap();
        assert_eq!(seq.members[0].delta, 0.1);
        assert!((seq.members[2].delta - 0.01).abs() < 1e-15);
        assert!(seq.alpha0 > 0.0);
        for m in &seq.members {
            let a = certify(&m.scenario.elasticity, &b.sample_points()).unwrap().alpha0;
            let a_base = certify(&b.elasticity, &b.sample_points()).unwrap().alpha0;
            let p = perturbation(&b).as_uniform().unwrap().norm();
            assert!(a >= a_base - m.eps * p - 1e-12);
        }
    }

    #[test]
    fn coercivity_loss_names_member() {
        let b = base();
        let law = DecayLaw { delta0: 0.0, eps0: 40.0 };
        match build_sequence(&b, law, &[1, 2, 4]) {
            Err(Error::Member { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected member error, got {other:?}"),
        }
        assert!(build_sequence(&b, law, &[1, 2]).is_err());
    }

    #[test]
    fn data_only_map_response_is_linear_in_eps() {
        let b = base();
        let law = DecayLaw { delta0: 0.0, eps0: 1.0 };
        let mut seq = build_sequence(&b, law, &[1, 2, 4]).unwrap();
        // keep tensors fixed so only the data scaling differs
        for m in &mut seq.members {
            m.scenario.elasticity = b.elasticity.clone();
            m.scenario.viscosity = b.viscosity.clone();
        }
        let probe = TrajectoryState::zero(b.family.clone(), &b.schedule, 0.0, 0.05, 10);
        let d = fixedpoint_convergence_check(&seq, 0.05, &probe).unwrap();
        for (n, dist) in &d {
            let expect = d[0].1 / *n as f64;
            assert!((dist - expect).abs() <= 0.1 * expect, "{d:?}");
        }
    }
}
