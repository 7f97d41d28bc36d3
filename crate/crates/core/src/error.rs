use std::path::PathBuf;

/// Errors raised anywhere in the attack pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("corrupt data: {0}")]
    Corruption(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical state error: {0}")]
    Numerical(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("objective failed: {0}")]
    Objective(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the numerical state of the optimizer
    /// rather than by inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
