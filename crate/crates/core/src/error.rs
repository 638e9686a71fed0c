use thiserror::Error;

/// Errors produced by samplers, planners and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("energy evaluation returned a non-finite value at {point:?}")]
    EnergyEvaluation { point: Vec<f64> },

    #[error("non-finite position for particle {particle} at level {level}")]
    NonFinitePosition { level: usize, particle: usize },

    #[error("degenerate weights at level {level}: {reason}")]
    DegenerateWeights { level: usize, reason: String },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("planner error: {0}")]
    Planner(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
