use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid record: {0}")]
    Invalid(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown game `{0}`")]
    UnknownGame(String),

    #[error("game `{game_id}` links to missing {kind} `{entity_id}`")]
    DanglingLink {
        game_id: String,
        kind: &'static str,
        entity_id: String,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tagger failed on sentence {sentence:?}: {message}")]
    Tagger { sentence: String, message: String },

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
}
