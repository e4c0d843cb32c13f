use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator, training loops, or loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid qubit target list {0:?}")]
    InvalidTargets(Vec<usize>),

    #[error("matrix is not unitary (max residual {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    /// Every branch was blocked by the post-selection filter.
    #[error("post-selection kept no probability mass (success probability {0:.3e})")]
    NullPostSelection(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("tomography: {0}")]
    Tomography(String),

    #[error("training failed: {0}")]
    Training(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
