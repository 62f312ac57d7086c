use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model construction, evaluation and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or parameter combination is outside the admissible region.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numeric procedure failed (underflow, singular system, non-convergence).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Two series that must be aligned have different lengths.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
