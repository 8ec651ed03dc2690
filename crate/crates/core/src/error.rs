use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the embedding pipeline.
#[derive(Debug, Error)]
pub enum AgeError {
    /// Malformed caller-supplied data (bad indices, mismatched lengths).
    #[error("invalid input: {0}")]
    Input(String),

    /// A mathematical precondition does not hold (zero vector, asymmetric matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsatisfiable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Problem size exceeds a configured cap.
    #[error("capacity exceeded: order {order} is above the cap of {cap}")]
    Capacity { order: usize, cap: usize },

    /// An operation was invoked in a state that does not allow it.
    #[error("state error: {0}")]
    State(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl AgeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AgeError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = AgeError> = std::result::Result<T, E>;
