use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Fock-space dimension {0}: need at least 2 levels")]
    InvalidDimension(usize),

    #[error("invalid rate `{name}` = {value}: must be positive")]
    InvalidRate { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("stochastic step failed at t = {t}: {reason} (try a smaller dt)")]
    StepFailure { t: f64, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("singular linear system in steady-state solve")]
    Singular,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
