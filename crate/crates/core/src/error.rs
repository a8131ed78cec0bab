use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate variance: the series is constant")]
    DegenerateVariance,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no critical value for gamma={gamma}, n={n}, alpha={alpha}")]
    MissingQuantile { gamma: f64, n: usize, alpha: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest field {pointer}: {message}")]
    Manifest { pointer: String, message: String },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
