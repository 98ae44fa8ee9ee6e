use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value or cross-field constraint was violated.
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("{0}")]
    Parse(String),

    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: u64, reason: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("no dense areas found (eps_km={eps_km}, min_pts={min_pts})")]
    NoDenseAreas { eps_km: f64, min_pts: usize },

    #[error("unsupported algorithm `{0}`")]
    UnsupportedAlgorithm(String),

    #[error("stream out of order at trigger {index}: t={t} after t={previous}")]
    OutOfOrder { index: usize, t: f64, previous: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
