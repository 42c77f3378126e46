use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The sampled window does not extend far enough beyond the query
    /// rectangle for the answer to be exact.
    #[error("censored: query needs margin {required} but the sample provides {available}")]
    Censored { required: f64, available: f64 },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("out of range: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, PercolationError>;

pub(crate) fn invalid(msg: impl Into<String>) -> PercolationError {
    PercolationError::InvalidParameter(msg.into())
}
