use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed config document: {0}")]
    ConfigSyntax(String),

    /// A parameter constraint of the boundary value problem is violated.
    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("integration overflow at x = {x}")]
    IntegrationOverflow { x: f64 },

    #[error("step budget exceeded: {steps} steps on [{x_from}, {x_to}] did not reach tolerance {tolerance:e}")]
    StepBudget {
        steps: usize,
        x_from: f64,
        x_to: f64,
        tolerance: f64,
    },

    #[error("invalid segment: {0}")]
    Segment(String),

    #[error("lambda = {lambda} is not an eigenvalue (relative 2x2 determinant {measure:e})")]
    NotAnEigenvalue { lambda: String, measure: f64 },

    #[error("sign anomaly: bracket [{lo}, {hi}] has no sign change after re-evaluation")]
    SignAnomaly { lo: f64, hi: f64 },

    #[error("contour passes within the |w| floor of a zero near lambda = {lambda}")]
    BoundaryProximity { lambda: String },

    #[error("no convergence after {iterations} iterations (last contraction ratio {ratio:e})")]
    NonConvergence { iterations: usize, ratio: f64 },

    #[error("eigenvalue iteration failed: {0}")]
    Eigen(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
