//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty dataset after {0}")]
    Empty(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("objective diverged (non-finite) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("distribution lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("no group has test interactions; nothing to evaluate")]
    NoEvaluableGroups,

    #[error("no prediction supplied for group {group} by external method {method}")]
    MissingPrediction { method: String, group: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a pipeline stage name to an error.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input (files, arguments, config) as
    /// opposed to internal failures. The CLI maps these to exit code 2.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Empty(_)
            | Error::InvalidParam(_)
            | Error::LengthMismatch { .. }
            | Error::MissingPrediction { .. } => true,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
