use thiserror::Error;

use melnikov_core::MelnikovError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("quadrature did not converge: error estimate {estimate:e} exceeds {limit:e}")]
    QuadratureNonConvergent { estimate: f64, limit: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("maximum arc length {0} exceeded")]
    MaxArcLength(f64),
    #[error("state left every chart of the atlas: {0}")]
    LeftAtlas(String),
    #[error("step size underflow at s = {0}")]
    StepSizeUnderflow(f64),
    #[error("bracket does not straddle a root: {0}")]
    NoRoot(String),
    #[error("shooting did not converge: {0}")]
    NonConvergent(String),
    #[error("trace never enters the twist window")]
    WindowEmpty,
    #[error("location outside the validity regime of the truncation: {0}")]
    OutsideValidity(String),
    #[error("mu = {mu} is on the non-periodic side: {reason}")]
    NonPeriodicSide { mu: f64, reason: String },
    #[error(transparent)]
    Core(#[from] MelnikovError),
}

pub type Result<T> = std::result::Result<T, LabError>;
