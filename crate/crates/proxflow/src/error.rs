use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sampling degenerated: could not draw a usable pair")]
    DegenerateSampling,

    #[error("residual inside dead zone; direction undefined")]
    InsideDeadzone,

    #[error("contraction regime unavailable: {detail}")]
    ContractionUnavailable { detail: String },

    #[error("constant-gain projection form requires an indicator prox")]
    NonIndicatorProx,

    #[error("operation requires a known solution on the problem")]
    MissingKnownSolution,

    #[error("operation requires the value function of the minimax problem")]
    MissingValueFunction,

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
