//! Library side of the `ddsm` command-line tool: experiment config files,
//! trace files and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod trace_io;

pub use error::CliError;
