//! Experiment presets, config files and artifact bundles for the `kerrosc`
//! command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod plots;
pub mod presets;
pub mod run;
pub mod validate;

pub use config::{Engine, ExperimentConfig, Overrides, Study};
pub use error::{CliError, Result};
pub use run::{execute, run_to_dir, Check, RunReport};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "KERROSC_OUT";
/// Output root when neither a flag, the config nor the environment names one.
pub const DEFAULT_OUT: &str = "kerrosc-out";
