use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("cannot blend two empty tonnages")]
    DegenerateBlend,
    #[error("stockpile {stockpile} is claimed by parcel {parcel} but holds no material")]
    EmptyStockpile { parcel: usize, stockpile: usize },
    #[error("{quantity} must be positive, got {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("genome shape {rows}x{cols} does not match instance {parcels}x{stockpiles}")]
    Shape {
        rows: usize,
        cols: usize,
        parcels: usize,
        stockpiles: usize,
    },
}

impl ModelError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("population size must be at least 4, got {0}")]
    PopulationTooSmall(usize),
    #[error("scale factor F must be positive and finite, got {0}")]
    ScaleFactor(f64),
    #[error("crossover rate must lie in [0, 1], got {0}")]
    CrossoverRate(f64),
    #[error("confidence level {name} must lie in (0, 1), got {value}")]
    Confidence { name: &'static str, value: f64 },
}
