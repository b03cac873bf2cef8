use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SopError>;

#[derive(Debug, Error)]
pub enum SopError {
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "composition cap exceeded for k={k}, M={parts}: {count} compositions > cap {cap}"
    )]
    CompositionCap {
        k: usize,
        parts: usize,
        count: u128,
        cap: u128,
    },

    #[error("numerical integrity failure: pre-clamp value {value} outside [-1e-9, 1+1e-9]")]
    NumericalIntegrity { value: f64 },

    #[error("numerical overflow while assembling {0}")]
    Overflow(&'static str),

    #[error("{what} did not converge (achieved error estimate {error_estimate:e})")]
    NonConvergence {
        what: &'static str,
        error_estimate: f64,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
