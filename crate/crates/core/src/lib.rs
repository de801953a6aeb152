//! Exact pfaffians, positivity certificates and the inverse mass problem for
//! collinear central configurations.

pub mod cli;
pub mod configuration;
pub mod inverse;
pub mod linalg;
pub mod pfaffian;
pub mod polynomial;
pub mod positivity;
pub mod ring;

pub use configuration::{CollinearConfig, ConfigError};
pub use pfaffian::{SkewMatrix, PfaffianError};
pub use polynomial::{PolyStats, SparsePoly};
pub use ring::{Field, Ring};
