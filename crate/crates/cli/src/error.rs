use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },

    #[error(transparent)]
    Model(#[from] kerrosc_core::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        use kerrosc_core::Error as E;
        match self {
            CliError::Config(_) | CliError::UnknownPreset { .. } => 2,
            CliError::Model(e) => match e {
                E::InvalidDimension(_) | E::InvalidRate { .. } | E::InvalidParameter { .. } | E::Unsupported(_) => 2,
                E::Integration { .. } | E::StepFailure { .. } | E::InvalidState(_) | E::Singular => 3,
            },
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
