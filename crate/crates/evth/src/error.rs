use std::path::Path;

use thiserror::Error;

/// Anything that stops a run before or outside the evolution itself. All of
/// these exit with status 4; numerical failures during the run are reported
/// through the termination instead.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
    #[error(transparent)]
    Core(#[from] evth_core::Error),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn checkpoint(path: &Path, reason: impl Into<String>) -> Self {
        RunError::Checkpoint {
            path: path.display().to_string(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        4
    }
}
