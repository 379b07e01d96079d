//! Library side of the `ego-ranker` command: each subcommand is a plain
//! function so tests can drive it without spawning a process.

pub mod commands;
pub mod config;
pub mod output;
pub mod state;

use ego_ranker_core::colley::ColleyError;
use ego_ranker_core::pipeline::PipelineError;

pub use commands::{cmd_export_dot, cmd_ingest, cmd_rank, cmd_simulate, EgoSelector};
pub use config::RunConfig;

/// Failure classes, each with a fixed exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input data (exit 1).
    #[error("{0}")]
    Input(String),
    /// Bad configuration, scenario or arguments (exit 2).
    #[error("{0}")]
    Config(String),
    /// The rating solver missed its residual contract (exit 3).
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub(crate) fn io(what: &str, path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{what} {}: {err}", path.display()))
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Colley(ColleyError::SolveFailure { .. }) => CliError::Solver(err.to_string()),
            PipelineError::Colley(ColleyError::EmptyFriendSet) => CliError::Config(err.to_string()),
            PipelineError::OutOfOrder { .. } | PipelineError::Scoring(_) => {
                CliError::Input(format!("out-of-order batch: {err}"))
            }
            other => CliError::Input(other.to_string()),
        }
    }
}
