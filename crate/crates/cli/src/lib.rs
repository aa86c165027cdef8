//! Instance files, word files, reports and the `kms-lab` subcommands.

pub mod commands;
pub mod instance;
pub mod report;
pub mod words;

pub use commands::{BetaChoice, EvaluateOptions, Outcome, SolveOptions, Target, VerifyOptions};
pub use instance::InstanceFile;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Empty(String),
}
