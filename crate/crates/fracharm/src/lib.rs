//! Numerical toolkit for operators mixing classical derivatives, fractional
//! Laplacians and Caputo time derivatives.

pub mod asymptotics;
pub mod caputo;
pub mod eigen;
pub mod error;
pub mod fractional_laplacian;
pub mod green_ball;
pub mod par;
pub mod quadrature;
pub mod span_harness;
pub mod specfun;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
