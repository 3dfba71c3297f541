use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("qubit not normalized: |alpha|^2 + |beta|^2 = {0}")]
    Unnormalized(f64),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("buffer not ready: {0}")]
    NotReady(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam { name: name.into(), reason: reason.into() }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse { line, reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
