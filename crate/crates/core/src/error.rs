use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZakError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("region does not cover the required set: missing ({0}, {1})")]
    Coverage(i64, i64),
    #[error("no compliant subgroup found for the given support")]
    NotFound,
    #[error("linear solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, ZakError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ZakError {
    ZakError::InvalidParameter(msg.into())
}
