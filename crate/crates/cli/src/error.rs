use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes shared by every subcommand.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// An `--expect-*` style check did not hold.
    pub const EXPECTATION: i32 = 1;
    /// Unreadable or invalid input (config, trace, arguments).
    pub const INPUT: i32 = 2;
    /// The objective could not be used at the starting point.
    pub const OBJECTIVE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: corrupt trace: {message}")]
    Trace { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
    #[error("objective error: {0}")]
    Objective(String),
    #[error("{0}")]
    Expectation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Config { .. }
            | CliError::Trace { .. }
            | CliError::Input(_) => exit::INPUT,
            CliError::Objective(_) => exit::OBJECTIVE,
            CliError::Expectation(_) => exit::EXPECTATION,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
