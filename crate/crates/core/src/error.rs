use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, indices or settings that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside the domain of an operation (non-finite angle, zero shots, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation called in the wrong order (backward before forward, step after done).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric guard: {0}")]
    Numeric(String),

    /// Failure talking to an external environment process.
    #[error("bridge error: {0}")]
    Bridge(String),

    #[error("environment fault: {0}")]
    Environment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
