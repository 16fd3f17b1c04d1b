//! Command-line front end: presets, config-driven runs and their outputs.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{RunConfig, RunKind};
pub use run::{execute, summary_json, write_artifacts, Artifact};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure during {stage}: {source}")]
    Solver {
        stage: &'static str,
        #[source]
        source: crate::Error,
    },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver { .. } => EXIT_SOLVER,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn solver(stage: &'static str) -> impl FnOnce(crate::Error) -> CliError {
        move |source| CliError::Solver { stage, source }
    }
}
