//! Spectral solver for a fourth-order eigenvalue problem on [-1, 1] with a
//! coefficient jump at x = 0, transmission conditions that depend on the
//! spectral parameter, and spectral-parameter dependent conditions at x = 1.

pub mod asymptotics;
pub mod basis;
pub mod charfn;
pub mod error;
pub mod expr;
pub mod ode;
pub mod oracle;
pub mod problem;
pub mod spectrum;
pub mod verify;
pub mod volterra;

pub use error::{Error, Result};
pub use expr::{ExprError, PotentialExpr};
pub use ode::{StateVec, C64};
pub use problem::{parse_config, parse_potential, Problem, SpectralParam};
