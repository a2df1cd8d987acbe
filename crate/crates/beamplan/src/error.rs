//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A data file does not match the expected schema. `row` is 1-based and
    /// counts the header as row 1.
    #[error("schema error at row {row}: {message}")]
    Schema { row: usize, message: String },

    /// A configured size cap (state count, oracle horizon, ...) was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A conditional law was requested given a zero-probability event.
    #[error("conditioning on a zero-probability event: {0}")]
    NullConditioning(String),

    /// A realized measurement does not belong to the modeled alphabet.
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    /// The chance constraints admit no policy for this model.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-parsable class identifier, used by the CLI exit path.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Schema { .. } => "schema-error",
            Error::Capacity(_) => "capacity",
            Error::NullConditioning(_) => "null-conditioning",
            Error::ModelMismatch(_) => "model-mismatch",
            Error::Infeasible(_) => "infeasible",
            Error::Io { .. } => "io",
            Error::Serde(_) => "serde",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
