use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The portable file is not well formed. `field` names the offending entry.
    #[error("format error in `{field}`: {message}")]
    Format { field: String, message: String },

    /// Layer shapes do not chain. `layer` is 1-based.
    #[error("dimension error at layer {layer}: {message}")]
    Dimension { layer: usize, message: String },

    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("query error: {0}")]
    Query(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    /// The solver crashed, printed garbage or reported an error.
    #[error("solver backend error: {0}")]
    Backend(String),

    /// The solver said `sat` but did not deliver a usable model.
    #[error("solver protocol error: {0}")]
    Protocol(String),

    #[error("oracle instance too big: {pairs} pairs exceeds cap {cap}")]
    OracleTooBig { pairs: u128, cap: u128 },

    #[error("replay error: {0}")]
    Replay(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
