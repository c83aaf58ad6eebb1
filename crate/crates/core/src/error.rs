use thiserror::Error;

/// Errors raised by the film-evolution library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("compatibility error: {0}")]
    Compatibility(String),

    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("state error: {0}")]
    State(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;

impl FlowError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FlowError::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FlowError::Domain(msg.into())
    }

    pub(crate) fn compat(msg: impl Into<String>) -> Self {
        FlowError::Compatibility(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        FlowError::Numeric {
            message: msg.into(),
            residual,
        }
    }
}
