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

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input data error: {0}")]
    Data(String),

    /// A simulation invariant was violated. This always indicates a bug in the
    /// simulator, never a bad input.
    #[error("invariant violation at t={time_us}us: {message}")]
    Invariant { time_us: u64, message: String },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn invariant(time_us: u64, msg: impl Into<String>) -> Self {
        Error::Invariant {
            time_us,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant { .. })
    }
}
