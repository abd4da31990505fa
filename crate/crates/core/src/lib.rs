//! Fractional derivatives of parallel section functions of origin-symmetric
//! star bodies, and numerical checkers for the inequalities they satisfy.

pub mod bodies;
pub mod error;
pub mod exec;
pub mod fracderiv;
pub mod quad;
pub mod radon;
pub mod verify;
pub mod special;

pub use error::{Error, Result};
pub use exec::Execution;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
