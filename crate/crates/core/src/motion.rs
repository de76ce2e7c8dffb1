//! Crack motions `Φ(t, ·)` carrying the initial crack onto the crack at time t,
//! and the validators built on them.

use crate::crack::{CrackPath, Schedule};
use crate::domain::Domain;
use crate::error::{Error, Result};

/// Quintic smoothstep, C² with vanishing first and second derivatives at 0 and 1.
fn smoothstep(r: f64) -> (f64, f64) {
    if r <= 0.0 {
        (0.0, 0.0)
    } else if r >= 1.0 {
        (1.0, 0.0)
    } else {
        let v = r * r * r * (10.0 - 15.0 * r + 6.0 * r * r);
        let d = 30.0 * r * r * (1.0 - r) * (1.0 - r);
        (v, d)
    }
}

/// C² ramp from 0 to 1 on `[0, 1]` whose derivative is flat on `[a, 1 − a]`,
/// which keeps `max |ramp'|` close to 1.
fn ramp(r: f64) -> (f64, f64) {
    const A: f64 = 0.1;
    let int_s = |x: f64| x.powi(4) * (2.5 - 3.0 * x + x * x);
    let norm = 1.0 - A;
    if r <= 0.0 {
        (0.0, 0.0)
    } else if r >= 1.0 {
        (1.0, 0.0)
    } else if r < A {
        (A * int_s(r / A) / norm, smoothstep(r / A).0 / norm)
    } else if r <= 1.0 - A {
        ((0.5 * A + r - A) / norm, 1.0 / norm)
    } else {
        ((norm - A * int_s((1.0 - r) / A)) / norm, smoothstep((1.0 - r) / A).0 / norm)
    }
}

/// Stretch of a straight path: `Φ(t, y) = y + (s(t) − s(0)) g(ξ) χ(η) e`,
/// with `ξ, η` the coordinates along and across the path.
#[derive(Debug, Clone, PartialEq)]
pub struct Stretch {
    origin: [f64; 2],
    tangent: [f64; 2],
    normal: [f64; 2],
    schedule: Schedule,
    s0: f64,
    collar: f64,
    far: f64,
    band: f64,
}

impl Stretch {
    /// Profile along the path and its derivative.
    fn g(&self, xi: f64) -> (f64, f64) {
        if xi <= self.s0 {
            let (v, d) = ramp((xi - self.collar) / (self.s0 - self.collar));
            (v, d / (self.s0 - self.collar))
        } else {
            let (v, d) = ramp((xi - self.s0) / (self.far - self.s0));
            (1.0 - v, -d / (self.far - self.s0))
        }
    }

    /// Cutoff across the path.
    fn chi(&self, eta: f64) -> f64 {
        1.0 - smoothstep((eta.abs() - 0.5 * self.band) / (0.5 * self.band)).0
    }

    fn coords(&self, y: [f64; 2]) -> (f64, f64) {
        let d = [y[0] - self.origin[0], y[1] - self.origin[1]];
        (d[0] * self.tangent[0] + d[1] * self.tangent[1], d[0] * self.normal[0] + d[1] * self.normal[1])
    }

    fn point(&self, xi: f64, eta: f64) -> [f64; 2] {
        [
            self.origin[0] + xi * self.tangent[0] + eta * self.normal[0],
            self.origin[1] + xi * self.tangent[1] + eta * self.normal[1],
        ]
    }

    fn advance(&self, t: f64) -> f64 {
        self.schedule.tip(t) - self.s0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CrackMotion {
    Identity,
    /// Rigid translation with constant velocity; `det DΦ ≡ 1`.
    Translation { velocity: [f64; 2] },
    Stretch(Stretch),
}

impl CrackMotion {
    /// Stretch map for a straight path starting on `∂Ω`, valid up to `t_end`.
    pub fn stretch(domain: &Domain, path: &CrackPath, schedule: &Schedule, t_end: f64) -> Result<CrackMotion> {
        if domain.dim != 2 || !path.is_straight() {
            return Err(Error::Geometry("stretch motions need a straight 2D path".into()));
        }
        let pts = path.points();
        let origin = pts[0];
        let tangent = path.tangent_at(0.0);
        let normal = [-tangent[1], tangent[0]];
        let len = path.length();
        let s0 = schedule.tip(0.0);
        let s_max = schedule.tip(t_end);
        let collar = 0.25 * s0.min(len - s_max);
        if !(s0 > 0.0) || !(collar > 0.0) {
            return Err(Error::Geometry(format!(
                "stretch motion needs 0 < s(0) ≤ s(T) < path length, got s(0) = {s0}, s(T) = {s_max}, length {len}"
            )));
        }
        // half-width of the band: stay well inside Ω on both sides of the path
        let b = domain.bounds;
        let mut clearance = f64::INFINITY;
        for k in 0..=64 {
            let p = path.point_at(len * k as f64 / 64.0);
            for (i, lo, hi) in [(0, b.min[0], b.max[0]), (1, b.min[1], b.max[1])] {
                if normal[i].abs() > 1e-12 {
                    clearance = clearance.min((p[i] - lo).abs() / normal[i].abs());
                    clearance = clearance.min((hi - p[i]).abs() / normal[i].abs());
                }
            }
        }
        let band = 0.5 * clearance;
        let stretch = Stretch {
            origin,
            tangent,
            normal,
            schedule: schedule.clone(),
            s0,
            collar,
            far: len - collar,
            band,
        };
        let motion = CrackMotion::Stretch(stretch);
        let (lo, _) = motion.det_range(&[0.0, t_end], domain);
        if lo <= 0.0 {
            return Err(Error::Geometry(format!(
                "stretch motion folds over (min det DΦ = {lo:.3e}); the tip advances too far"
            )));
        }
        Ok(motion)
    }

    pub fn phi(&self, t: f64, y: [f64; 2]) -> [f64; 2] {
        match self {
            CrackMotion::Identity => y,
            CrackMotion::Translation { velocity } => [y[0] + t * velocity[0], y[1] + t * velocity[1]],
            CrackMotion::Stretch(s) => {
                let (xi, eta) = s.coords(y);
                let shift = s.advance(t) * s.g(xi).0 * s.chi(eta);
                [y[0] + shift * s.tangent[0], y[1] + shift * s.tangent[1]]
            }
        }
    }

    pub fn phi_dot(&self, t: f64, y: [f64; 2]) -> [f64; 2] {
        match self {
            CrackMotion::Identity => [0.0, 0.0],
            CrackMotion::Translation { velocity } => *velocity,
            CrackMotion::Stretch(s) => {
                let (xi, eta) = s.coords(y);
                let rate = s.schedule.rate(t) * s.g(xi).0 * s.chi(eta);
                [rate * s.tangent[0], rate * s.tangent[1]]
            }
        }
    }

    /// `det DΦ(t, y)`.
    pub fn det_phi(&self, t: f64, y: [f64; 2]) -> f64 {
        match self {
            CrackMotion::Identity | CrackMotion::Translation { .. } => 1.0,
            CrackMotion::Stretch(s) => {
                let (xi, eta) = s.coords(y);
                1.0 + s.advance(t) * s.g(xi).1 * s.chi(eta)
            }
        }
    }

    pub fn psi(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self {
            CrackMotion::Identity => x,
            CrackMotion::Translation { velocity } => [x[0] - t * velocity[0], x[1] - t * velocity[1]],
            CrackMotion::Stretch(s) => {
                let (xi_x, eta) = s.coords(x);
                let delta = s.advance(t) * s.chi(eta);
                if delta == 0.0 {
                    return x;
                }
                // ξ ↦ ξ + δ g(ξ) is increasing; bracket and solve by safeguarded Newton
                let f = |xi: f64| xi + delta * s.g(xi).0 - xi_x;
                let (mut lo, mut hi) = (xi_x - delta.abs(), xi_x + delta.abs());
                let mut xi = xi_x;
                for _ in 0..200 {
                    let val = f(xi);
                    if val.abs() <= 1e-15 * (1.0 + xi_x.abs()) {
                        break;
                    }
                    if val > 0.0 {
                        hi = xi;
                    } else {
                        lo = xi;
                    }
                    let slope = 1.0 + delta * s.g(xi).1;
                    let next = xi - val / slope;
                    xi = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
                }
                s.point(xi, eta)
            }
        }
    }

    /// `(min, max)` of `det DΦ` over the times and a grid of `Ω̄`.
    fn det_range(&self, times: &[f64], domain: &Domain) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in times {
            for y in sample_grid(domain, 64) {
                let d = self.det_phi(t, y);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (lo, hi)
    }

    /// `(m_det(Ψ), M_det(Ψ))`, using `det DΨ(t, Φ(t, y)) = 1 / det DΦ(t, y)`.
    pub fn psi_det_bounds(&self, times: &[f64], domain: &Domain) -> (f64, f64) {
        let (lo, hi) = self.det_range(times, domain);
        (1.0 / hi, 1.0 / lo)
    }
}

/// Regular `(n + 1)^d` grid of points of `Ω̄`.
pub fn sample_grid(domain: &Domain, n: usize) -> Vec<[f64; 2]> {
    let b = domain.bounds;
    let at = |i: usize, axis: usize| b.min[axis] + (b.max[axis] - b.min[axis]) * i as f64 / n as f64;
    if domain.dim == 1 {
        return (0..=n).map(|i| [at(i, 0), 0.0]).collect();
    }
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            out.push([at(i, 0), at(j, 1)]);
        }
    }
    out
}

/// Outcome of the crack-speed condition `|Φ̇|² < m_det(Ψ) α₀ / (M_det(Ψ) K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport {
    pub max_speed_sq: f64,
    pub threshold: f64,
    pub m_det: f64,
    pub big_m_det: f64,
    pub passed: bool,
}

impl SpeedReport {
    /// Distance between the two sides of the inequality.
    pub fn margin(&self) -> f64 {
        (self.threshold - self.max_speed_sq).abs()
    }
}

pub fn check_speed_condition(motion: &CrackMotion, domain: &Domain, times: &[f64], alpha0: f64, korn_k: f64) -> Result<SpeedReport> {
    if !(alpha0 > 0.0) || !(korn_k > 0.0) {
        return Err(Error::Precondition(format!(
            "speed condition needs α₀ > 0 and K > 0, got {alpha0} and {korn_k}"
        )));
    }
    let mut max_speed_sq = 0.0f64;
    for &t in times {
        for y in sample_grid(domain, 64) {
            let v = motion.phi_dot(t, y);
            max_speed_sq = max_speed_sq.max(v[0] * v[0] + v[1] * v[1]);
        }
    }
    let (m_det, big_m_det) = motion.psi_det_bounds(times, domain);
    let threshold = m_det * alpha0 / (big_m_det * korn_k);
    Ok(SpeedReport { max_speed_sq, threshold, m_det, big_m_det, passed: max_speed_sq < threshold })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Largest distance of `Φ(t, Γ₀)` from `Γ_t`, including endpoint mismatch.
    pub crack_defect: f64,
    /// Largest displacement of sampled boundary points.
    pub collar_defect: f64,
    /// Largest `|Ψ(t, Φ(t, y)) − y|` on the sample grid.
    pub inverse_defect: f64,
    /// Largest `|Φ(0, y) − y|`.
    pub initial_defect: f64,
    pub passed: bool,
}

/// Checks `Φ(t, Γ₀) = Γ_t`, the fixed boundary collar, `Ψ ∘ Φ = id` and `Φ(0, ·) = id`.
pub fn check_motion_consistency(motion: &CrackMotion, domain: &Domain, path: &CrackPath, schedule: &Schedule, times: &[f64]) -> ConsistencyReport {
    let s_init = schedule.tip(0.0).clamp(0.0, path.length());
    let mut crack_defect = 0.0f64;
    let mut collar_defect = 0.0f64;
    let mut inverse_defect = 0.0f64;
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let grid = sample_grid(domain, 32);
    for &t in times {
        let s_t = schedule.tip(t).clamp(0.0, path.length());
        for k in 0..=64 {
            let y = path.point_at(s_init * k as f64 / 64.0);
            let x = motion.phi(t, y);
            // arclength of the image along the path, found by projection
            let mut best = f64::INFINITY;
            for m in 0..=512 {
                best = best.min(dist(x, path.point_at(s_t * m as f64 / 512.0)));
            }
            crack_defect = crack_defect.max(best);
        }
        crack_defect = crack_defect.max(dist(motion.phi(t, path.point_at(s_init)), path.point_at(s_t)));
        for &y in grid.iter().filter(|y| domain.on_boundary(**y)) {
            collar_defect = collar_defect.max(dist(motion.phi(t, y), y));
        }
        for &y in &grid {
            inverse_defect = inverse_defect.max(dist(motion.psi(t, motion.phi(t, y)), y));
        }
    }
    let initial_defect = grid.iter().map(|&y| dist(motion.phi(0.0, y), y)).fold(0.0, f64::max);
    // the projection onto 513 samples of Γ_t resolves distances to about |Γ_t|/1024
    let resolution = path.length() / 1024.0;
    let passed = crack_defect <= 1e-8 + resolution
        && collar_defect <= 1e-8
        && inverse_defect <= 1e-10
        && initial_defect == 0.0;
    ConsistencyReport { crack_defect, collar_defect, inverse_defect, initial_defect, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Side;

    fn setup() -> (Domain, CrackPath) {
        let d = Domain::unit_square(&[Side::Bottom, Side::Top]).unwrap();
        let p = CrackPath::new(2, vec![[0.0, 0.5], [1.0, 0.5]]).unwrap();
        (d, p)
    }

    fn times() -> Vec<f64> {
        (0..=10).map(|k| k as f64 * 0.1).collect()
    }

    #[test]
    fn ramp_is_c1_and_normalized() {
        let h = 1e-6;
        for k in 1..1000 {
            let r = k as f64 / 1000.0;
            let fd = (ramp(r + h).0 - ramp(r - h).0) / (2.0 * h);
            assert!((fd - ramp(r).1).abs() < 1e-6, "r = {r}");
        }
        assert!((ramp(1.0 - 1e-12).0 - 1.0).abs() < 1e-10);
        assert!(ramp(1e-12).0.abs() < 1e-10);
    }

    #[test]
    fn stationary_crack_always_passes() {
        let (d, _) = setup();
        let r = check_speed_condition(&CrackMotion::Identity, &d, &times(), 1e-3, 100.0).unwrap();
        assert_eq!(r.max_speed_sq, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn translation_speed_threshold() {
        let (d, _) = setup();
        let m = CrackMotion::Translation { velocity: [2.0, 0.0] };
        let r = check_speed_condition(&m, &d, &times(), 1.0, 1.0).unwrap();
        assert!(!r.passed);
        assert!((r.margin() - 3.0).abs() < 1e-12);
        assert!(check_speed_condition(&m, &d, &times(), 0.0, 1.0).is_err());
    }

    #[test]
    fn stretch_is_consistent_and_invertible() {
        let (d, p) = setup();
        let sch = Schedule::linear(0.25, 0.5).unwrap();
        let m = CrackMotion::stretch(&d, &p, &sch, 1.0).unwrap();
        let r = check_motion_consistency(&m, &d, &p, &sch, &times());
        assert!(r.passed, "{r:?}");
        assert!(r.inverse_defect <= 1e-10);
        let x = m.phi(0.7, [0.25, 0.5]);
        assert!((x[0] - 0.6).abs() < 1e-14 && x[1] == 0.5);
        let s = check_speed_condition(&m, &d, &times(), 1.0, 1.0).unwrap();
        assert!((s.max_speed_sq - 0.25).abs() < 1e-12);
        assert!(s.m_det < 1.0 && s.big_m_det > 1.0);
    }

    #[test]
    fn identity_motion_with_advancing_tip_fails() {
        let (d, p) = setup();
        let still = check_motion_consistency(&CrackMotion::Identity, &d, &p, &Schedule::constant(0.3), &times());
        assert!(still.passed);
        let moving = Schedule::linear(0.25, 0.5).unwrap();
        let r = check_motion_consistency(&CrackMotion::Identity, &d, &p, &moving, &times());
        assert!(!r.passed);
        assert!(r.crack_defect > 0.4);
    }

    #[test]
    fn speed_check_is_monotone_in_speed() {
        let (d, _) = setup();
        let mut failed = false;
        for k in 0..40 {
            let v = 0.05 * k as f64;
            let m = CrackMotion::Translation { velocity: [v, 0.0] };
            let r = check_speed_condition(&m, &d, &times(), 0.8, 1.3).unwrap();
            assert!(!(failed && r.passed));
            failed |= !r.passed;
        }
        assert!(failed);
    }
}
