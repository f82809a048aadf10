use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("degenerate estimator: {0}")]
    Degenerate(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
