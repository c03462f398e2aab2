use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a {expected}-dimensional vector, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid robot model: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("start or goal configuration is in collision: {0}")]
    InCollision(&'static str),

    #[error("no path found after {iterations} iterations")]
    NoPath { iterations: usize },

    #[error("objective evaluation failed in generation {generation}: {message}")]
    Evaluation { generation: usize, message: String },

    #[error("online run aborted at t = {time:.3} s: {reason}")]
    OnlineAbort { time: f64, reason: String },

    #[error("scenario {path}: {message}")]
    Scenario { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
