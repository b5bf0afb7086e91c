use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] gftbench_core::CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("metadata mismatch: {0}")]
    Meta(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("class {class} has {size} nodes, needs at least {needed}")]
    ClassTooSmall {
        class: usize,
        size: usize,
        needed: usize,
    },

    #[error("statistics error: {0}")]
    Stats(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        HarnessError::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
