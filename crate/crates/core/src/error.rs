use thiserror::Error;

/// Errors raised by the geometry kernel, the solvers and the benchmark layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition or invariant.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
