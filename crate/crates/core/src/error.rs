use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-smooth energy: {0}")]
    NonSmooth(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("empty phase: {0}")]
    EmptyPhase(String),

    #[error("undefined fit: {0}")]
    UndefinedFit(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("solver did not converge within its budget (stop: {:?})", .0.stop)]
    NonConvergence(Box<crate::solver::SolveReport>),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
