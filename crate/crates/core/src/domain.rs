//! Rectangular (or interval) reference configuration and its boundary partition.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    const SLACK: f64 = 1e-12;

    pub fn contains(&self, dim: usize, p: [f64; 2]) -> bool {
        (0..dim).all(|i| {
            let span = (self.max[i] - self.min[i]).abs().max(1.0);
            p[i] >= self.min[i] - Self::SLACK * span && p[i] <= self.max[i] + Self::SLACK * span
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn sides(dim: usize) -> &'static [Side] {
        if dim == 1 {
            &Self::ALL[..2]
        } else {
            &Self::ALL
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            other => Err(format!("unknown boundary side '{other}'")),
        }
    }
}

/// Ω as an axis-aligned box, with each side tagged Dirichlet or Neumann.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub dim: usize,
    pub bounds: Bounds,
    dirichlet: Vec<Side>,
}

impl Domain {
    pub fn new(dim: usize, bounds: Bounds, dirichlet: &[Side], neumann: &[Side]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Precondition(format!("unsupported dimension {dim}")));
        }
        for i in 0..dim {
            if !(bounds.min[i] < bounds.max[i]) {
                return Err(Error::Precondition(format!(
                    "empty extent along axis {i}: [{}, {}]",
                    bounds.min[i], bounds.max[i]
                )));
            }
        }
        let allowed = Side::sides(dim);
        for s in dirichlet.iter().chain(neumann) {
            if !allowed.contains(s) {
                return Err(Error::Precondition(format!("side '{s}' does not exist in {dim}D")));
            }
        }
        if let Some(s) = dirichlet.iter().find(|s| neumann.contains(s)) {
            return Err(Error::Precondition(format!(
                "side '{s}' tagged both Dirichlet and Neumann"
            )));
        }
        let mut d: Vec<Side> = dirichlet.to_vec();
        d.sort();
        d.dedup();
        Ok(Domain { dim, bounds, dirichlet: d })
    }

    pub fn unit_square(dirichlet: &[Side]) -> Result<Self> {
        Self::new(
            2,
            Bounds { min: [0.0, 0.0], max: [1.0, 1.0] },
            dirichlet,
            &[],
        )
    }

    pub fn interval(a: f64, b: f64, dirichlet: &[Side]) -> Result<Self> {
        Self::new(1, Bounds { min: [a, 0.0], max: [b, 0.0] }, dirichlet, &[])
    }

    pub fn dirichlet_sides(&self) -> &[Side] {
        &self.dirichlet
    }

    pub fn neumann_sides(&self) -> Vec<Side> {
        Side::sides(self.dim)
            .iter()
            .copied()
            .filter(|s| !self.dirichlet.contains(s))
            .collect()
    }

    pub fn is_dirichlet(&self, side: Side) -> bool {
        self.dirichlet.contains(&side)
    }

    /// Sides on which `p` lies.
    pub fn sides_of(&self, p: [f64; 2]) -> Vec<Side> {
        let tol = 1e-10;
        let mut out = Vec::new();
        let b = &self.bounds;
        if (p[0] - b.min[0]).abs() < tol {
            out.push(Side::Left);
        }
        if (p[0] - b.max[0]).abs() < tol {
            out.push(Side::Right);
        }
        if self.dim == 2 {
            if (p[1] - b.min[1]).abs() < tol {
                out.push(Side::Bottom);
            }
            if (p[1] - b.max[1]).abs() < tol {
                out.push(Side::Top);
            }
        }
        out
    }

    pub fn on_boundary(&self, p: [f64; 2]) -> bool {
        !self.sides_of(p).is_empty()
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.bounds.max[i] - self.bounds.min[i])
            .product()
    }
}
