use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("singular schedule at t = {t}: {reason}")]
    SingularSchedule { t: f64, reason: String },

    #[error("time {t} outside schedule domain: {reason}")]
    Domain { t: f64, reason: String },

    #[error("invalid run parameters: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
