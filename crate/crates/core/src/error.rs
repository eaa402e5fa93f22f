use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("missing value at row {row}, column {column}")]
    MissingData { row: usize, column: usize },

    #[error("variable '{name}' has zero variance")]
    DegenerateVariance { name: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient samples: n = {n}, but at least {required} are needed")]
    InsufficientSamples { n: usize, required: usize },

    #[error("degenerate test input: {0}")]
    Degenerate(String),

    #[error("kernel matrix is numerically singular even after jitter")]
    Conditioning,

    #[error(
        "design has {regressors} lagged regressors (N*tau_max) but only {n} samples; \
         full conditioning cannot be applied"
    )]
    Dimensionality { regressors: usize, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no stationary model found after {attempts} draws")]
    Unsatisfiable { attempts: usize },

    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },

    #[error("malformed null-table file {path}: {message}")]
    NullTableFormat { path: PathBuf, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration-type failures map to CLI exit code 2, everything else to 3.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Contract(_) | Error::Parse { .. } | Error::MissingData { .. }
        )
    }
}
