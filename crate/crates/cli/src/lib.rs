//! Batch front-end for the transfer scenarios and diagnostics.

pub mod config;
pub mod run;

pub use config::{Command, Format, RunConfig};
pub use run::{execute, render, run_main};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// Help or version text; printed to stdout with a zero exit status.
    #[error("{0}")]
    Info(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("scenario failed: {0}")]
    Scenario(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Scenario(_) => 3,
        }
    }
}

impl From<qctl_core::Error> for CliError {
    fn from(e: qctl_core::Error) -> Self {
        CliError::Scenario(e.to_string())
    }
}
