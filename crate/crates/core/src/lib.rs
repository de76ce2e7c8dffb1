pub mod assembly;
pub mod config;
pub mod convergence;
pub mod crack;
pub mod domain;
pub mod elastodynamics;
pub mod error;
pub mod expr;
pub mod korn;
pub mod linalg;
pub mod load;
pub mod memory;
pub mod mesh;
pub mod output;
pub mod motion;
pub mod scenario;
pub mod sparse;
pub mod tensor;
pub mod trajectory;
pub mod viscoelastic;

pub use error::{Error, Result};
