use thiserror::Error;

/// Errors produced by the model, solvers and generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcsError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance factorization failed even with diagonal jitter {scale:e}")]
    SingularCovariance { scale: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("digamma domain error: argument {0} is not positive")]
    Domain(f64),

    #[error("fixture format error at line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, BcsError>;

impl From<std::io::Error> for BcsError {
    fn from(e: std::io::Error) -> Self {
        BcsError::Io(e.to_string())
    }
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> BcsError {
    BcsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
