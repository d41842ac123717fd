use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration rejected: {0}")]
    Validation(String),

    #[error("branch-touching point at k = ({kx}, {ky}): S = {s:e} is below the degeneracy floor")]
    Degenerate { kx: f64, ky: f64, s: f64 },

    #[error("resonant frequency: |Delta| = {delta:e} at k = ({kx}, {ky}) is below the floor")]
    Resonance { kx: f64, ky: f64, delta: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation became unstable at t = {t}: |u| = {magnitude:e}")]
    Instability { t: f64, magnitude: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
