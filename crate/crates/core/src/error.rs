use std::path::PathBuf;

use thiserror::Error;

/// A single problem found while reading a scenario document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain bounding box")]
    Domain { point: [f64; 2] },

    #[error("coercivity violated at {point:?}: smallest eigenvalue {eigenvalue:e} for witness {witness:?}")]
    CoercivityViolation {
        point: [f64; 2],
        eigenvalue: f64,
        /// Witness symmetric matrix in the orthonormal symmetric basis.
        witness: Vec<f64>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("crack geometry: {0}")]
    Geometry(String),

    #[error("ordering: {0}")]
    Ordering(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error("configuration errors:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge: {iterations} iterations, measured ratio {ratio:.4}, {subintervals} subintervals")]
    Contraction {
        iterations: usize,
        ratio: f64,
        subintervals: usize,
    },

    #[error("precondition: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("sequence member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Precondition(_) | Error::Geometry(_) | Error::Domain { .. } => 2,
            Error::Solver { .. } | Error::Contraction { .. } | Error::Assembly(_) | Error::Mesh(_) => 3,
            Error::Member { source, .. } => source.exit_code(),
            Error::Io { .. } => 3,
            Error::CoercivityViolation { .. }
            | Error::DimensionMismatch { .. }
            | Error::Ordering(_)
            | Error::Invariant(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
