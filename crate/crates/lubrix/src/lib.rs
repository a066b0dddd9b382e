//! Configuration, command dispatch and artifact output for `lubrix-core`.

use std::io;

pub mod commands;
pub mod config;
pub mod report;
pub mod sampling;

pub use commands::{dispatch, Command, Outcome};
pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use report::{csv_config_hash, SolverReport, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] lubrix_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    /// A run that finished but did not meet its own checks.
    #[error("{message}")]
    Check { kind: &'static str, message: String },
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(io::Error::other(e))
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Io { .. }) => EXIT_SOLVER,
            RunError::Config(_) => EXIT_INVALID,
            _ => EXIT_SOLVER,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(ConfigError::Io { .. }) => "io",
            RunError::Config(ConfigError::Parse { .. }) => "config_parse",
            RunError::Config(ConfigError::Invalid(_)) => "config_invalid",
            RunError::Solver(e) => e.kind(),
            RunError::Io(_) => "io",
            RunError::Check { kind, .. } => kind,
        }
    }
}
