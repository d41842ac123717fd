use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] trilattice::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        CliError::Json { path: path.into(), source }
    }

    /// 2 usage, 3 validation, 4 numerical failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        use trilattice::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) => 2,
                E::Validation(_) | E::GridMismatch(_) => 3,
                E::Degenerate { .. } | E::Resonance { .. } | E::Numerical(_) | E::Instability { .. } => 4,
                E::Io { .. } | E::Parse { .. } => 5,
            },
            CliError::Io { .. } | CliError::Json { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
