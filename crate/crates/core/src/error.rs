use thiserror::Error;

/// Errors raised by the numerical and decision routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integrand is not integrable on [{lo}, {hi}]: {reason}")]
    NonIntegrable { lo: f64, hi: f64, reason: String },
    #[error("degenerate interval ({0}, {1}): dual measure vanishes")]
    DegenerateInterval(f64, f64),
    #[error("component {0} minus the singular set is disconnected")]
    Disconnected(usize),
    #[error("one-sided limit at {pivot} does not exist (oscillation {oscillation:e})")]
    LimitMissing { pivot: f64, oscillation: f64 },
    #[error("condition failed: {0}")]
    ConditionFailed(String),
    #[error("set is not removable: {0}")]
    NotRemovable(String),
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e}, tolerance {tol:e})")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        tol: f64,
    },
    #[error("ball of radius {radius} scaled by 6 leaves the domain")]
    BallTooLarge { radius: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
