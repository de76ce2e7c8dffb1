//! A complete cracked viscoelastic problem: space family, crack schedule,
//! tensors, data, horizon and solver settings.

use std::sync::Arc;

use crate::crack::{CrackPath, Schedule, SpaceFamily};
use crate::domain::{Domain, Side};
use crate::error::{ConfigIssue, Error, Result};
use crate::expr::Expr;
use crate::korn::{estimate_korn_constant, KornEstimate};
use crate::load::LoadData;
use crate::motion::{check_speed_condition, CrackMotion, SpeedReport};
use crate::sparse::CgSettings;
use crate::tensor::{certify, Tensor4Field, TensorCertificate};

/// What to do when the crack-speed condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum H15Policy {
    #[default]
    Warn,
    Strict,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub family: Arc<SpaceFamily>,
    pub schedule: Schedule,
    pub elasticity: Tensor4Field,
    pub viscosity: Tensor4Field,
    pub data: LoadData,
    pub t_end: f64,
    pub cg: CgSettings,
    pub h15: H15Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCertificate {
    pub elasticity: TensorCertificate,
    /// `None` when the viscosity vanishes identically.
    pub viscosity: Option<TensorCertificate>,
    /// Common coercivity constant of `ℂ` and `𝕍`.
    pub alpha0: f64,
    /// Common bound on `‖ℂ‖`, `‖𝕍‖`.
    pub m0: f64,
    /// Korn constant of the fully open space.
    pub korn: KornEstimate,
    /// `None` when no crack motion could be built for the schedule.
    pub speed: Option<SpeedReport>,
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn domain(&self) -> &Domain {
        self.family.domain()
    }

    pub fn dim(&self) -> usize {
        self.family.mesh().dim()
    }

    /// `𝔸 = ℂ + 𝕍`.
    pub fn total_tensor(&self) -> Result<Tensor4Field> {
        self.elasticity.sum(&self.viscosity)
    }

    pub fn with_horizon(&self, t_end: f64) -> Scenario {
        Scenario { t_end, ..self.clone() }
    }

    pub fn with_viscosity(&self, viscosity: Tensor4Field) -> Scenario {
        Scenario { viscosity, ..self.clone() }
    }

    pub fn with_data(&self, data: LoadData) -> Scenario {
        Scenario { data, ..self.clone() }
    }

    /// Element centroids and mesh vertices: the points where tensors are
    /// evaluated or certified.
    pub fn sample_points(&self) -> Vec<[f64; 2]> {
        let mesh = self.family.mesh();
        let mut pts = mesh.centroids();
        pts.extend_from_slice(mesh.vertices());
        pts
    }

    pub fn viscosity_is_zero(&self) -> bool {
        self.viscosity.is_zero_on(&self.sample_points())
    }

    /// Number of steps of size `dt` covering `[0, t_end]`.
    pub fn steps(&self, dt: f64) -> Result<usize> {
        step_count(self.t_end, dt)
    }

    /// Cheap checks every solver runs before stepping.
    pub fn check_basic(&self) -> Result<()> {
        let dim = self.dim();
        for (name, t) in [("elasticity", &self.elasticity), ("viscosity", &self.viscosity)] {
            if t.dim() != dim {
                return Err(Error::Precondition(format!("{name} tensor has dimension {}, mesh has {dim}", t.dim())));
            }
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Precondition(format!("horizon must be positive, got {}", self.t_end)));
        }
        if self.data.has_dirichlet_datum() && self.domain().dirichlet_sides().is_empty() {
            return Err(Error::Config(vec![ConfigIssue {
                line: 0,
                message: "nonzero Dirichlet datum but no side is tagged Dirichlet".into(),
            }]));
        }
        Ok(())
    }

    /// Motion realizing the schedule, for the speed condition.
    pub fn motion(&self) -> Result<CrackMotion> {
        if self.schedule.lipschitz() == 0.0 {
            return Ok(CrackMotion::Identity);
        }
        CrackMotion::stretch(self.domain(), self.family.path(), &self.schedule, self.t_end)
    }

    /// Runs all hypothesis validators: tensor symmetry, coercivity and
    /// boundedness, Korn's constant and the crack-speed condition.
    pub fn certify(&self) -> Result<ScenarioCertificate> {
        self.check_basic()?;
        let pts = self.sample_points();
        let elasticity = certify(&self.elasticity, &pts)?;
        let viscosity = if self.viscosity.is_zero_on(&pts) { None } else { Some(certify(&self.viscosity, &pts)?) };
        let (alpha0, m0) = match &viscosity {
            Some(v) => (elasticity.alpha0.min(v.alpha0), elasticity.m0.max(v.m0)),
            None => (elasticity.alpha0, elasticity.m0),
        };
        let korn = estimate_korn_constant(self.family.fully_open())?;
        let mut warnings = Vec::new();
        let speed = match self.motion() {
            Ok(m) => {
                let times: Vec<f64> = (0..=16).map(|i| self.t_end * i as f64 / 16.0).collect();
                Some(check_speed_condition(&m, self.domain(), &times, alpha0, korn.k)?)
            }
            Err(e) => {
                warnings.push(format!("crack-speed condition not checked: {e}"));
                None
            }
        };
        if let Some(s) = &speed {
            if !s.passed {
                let msg = format!(
                    "crack-speed condition fails: max |Φ̇|² = {:.6e} ≥ threshold {:.6e}",
                    s.max_speed_sq, s.threshold
                );
                if self.h15 == H15Policy::Strict {
                    return Err(Error::Precondition(msg));
                }
                warnings.push(msg);
            }
        } else if self.h15 == H15Policy::Strict {
            return Err(Error::Precondition(warnings.join("; ")));
        }
        Ok(ScenarioCertificate { elasticity, viscosity, alpha0, m0, korn, speed, warnings })
    }
}

pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    let n = (t_end / dt).round();
    if n < 1.0 || (n * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::Precondition(format!("time step {dt} does not divide the horizon {t_end}")));
    }
    Ok(n as usize)
}

/// Unit square, horizontal crack along `y = 1/2` from the left side,
/// clamped bottom and top, tip moving from 0.25 to 0.75 over `[0, 1]`.
pub fn growing_crack(h: f64) -> Result<Scenario> {
    let domain = Domain::unit_square(&[Side::Bottom, Side::Top])?;
    let path = CrackPath::new(2, vec![[0.0, 0.5], [1.0, 0.5]])?;
    let family = Arc::new(SpaceFamily::build(&domain, &path, h)?);
    let b = domain.bounds;
    let p = |s: &str| Expr::parse(s).expect("preset expression");
    let data = LoadData::new(
        [Expr::zero(), Expr::zero()],
        [p("sin(pi*y)*x"), p("0")],
        [p("sin(pi*x)*sin(pi*y)*t"), p("cos(pi*x)*sin(pi*y)")],
        [p("0.1*t*x"), p("0.2*t"), p("0.05*sin(pi*x)*t")],
        [Expr::zero(), Expr::zero()],
    );
    Ok(Scenario {
        family,
        schedule: Schedule::linear(0.25, 0.5)?,
        elasticity: Tensor4Field::isotropic(2, b, 1.0, 1.0),
        viscosity: Tensor4Field::isotropic(2, b, 0.2, 0.3),
        data,
        t_end: 1.0,
        cg: CgSettings::default(),
        h15: H15Policy::Warn,
    })
}

/// [`growing_crack`] with the tip held at 0.5.
pub fn static_crack(h: f64) -> Result<Scenario> {
    let mut sc = growing_crack(h)?;
    sc.schedule = Schedule::constant(0.5);
    Ok(sc)
}
