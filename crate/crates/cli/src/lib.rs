//! Library side of the `vigpm` command-line tool: configuration parsing and
//! the subcommand implementations. `main.rs` only handles arguments and exit
//! codes.

pub mod commands;
pub mod config;

pub use commands::{Command, Outcome};
pub use config::RunConfig;

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// Converged, or the experiment verdict passed.
    Success = 0,
    /// Bad input, I/O failure or a solver error.
    Error = 1,
    MaxIters = 2,
    Diverged = 3,
    /// The experiment ran but its verdict failed.
    VerdictFailed = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] vigpm::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("encoding summary: {0}")]
    Json(#[from] serde_json::Error),
}
