use thiserror::Error;

/// Errors raised by oracles, samplers and the run pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The oracle was asked for something it does not provide.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A configuration file is missing fields or names unknown options.
    #[error("configuration: {0}")]
    Config(String),
    /// Probability mass too small to sample from in double precision.
    #[error("underflow: {0}")]
    Underflow(String),
    /// A sampler detected a state its guarantees do not cover.
    #[error("sampler anomaly: {0}")]
    Anomaly(String),
    /// An optimizer hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
