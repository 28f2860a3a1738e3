//! Experiment harness for the stockpile blending solver: random instance
//! generation, multi-run experiments with per-run logs and summary tables,
//! Monte Carlo validation of chance constraints, and the file formats used by
//! the `stockblend` command line tool.

pub mod experiment;
pub mod generator;
pub mod report;
pub mod solution;
pub mod validate;

mod nonfinite;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] stockblend_core::ModelError),
    #[error(transparent)]
    Config(#[from] stockblend_core::ConfigError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Problems with user input (including missing input files), as opposed to
    /// the environment.
    pub fn is_input_error(&self) -> bool {
        let missing = |e: &std::io::Error| e.kind() == std::io::ErrorKind::NotFound;
        match self {
            HarnessError::Io { source, .. } => missing(source),
            HarnessError::Model(stockblend_core::ModelError::Io { source, .. }) => missing(source),
            _ => true,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
