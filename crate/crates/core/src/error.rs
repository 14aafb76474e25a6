use std::path::PathBuf;

use gssl_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {msg}", file = file.display())]
    Load {
        file: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("I/O error on {path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("negative sampling failed: {0}")]
    Sampling(String),
    #[error("non-finite {what}: {detail}")]
    Numeric { what: String, detail: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn load(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Load {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
