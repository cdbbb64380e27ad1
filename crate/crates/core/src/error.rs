use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing column {column:?} in {path}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown word {0:?}")]
    UnknownWord(String),

    #[error("zero vector has no defined cosine similarity")]
    ZeroVector,

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch}: loss is {loss} (learning rate too high?)")]
    Diverged { epoch: usize, loss: f64 },

    #[error("not enough seed words for the {pole} pole: needed {needed}, found {found}")]
    SeedShortfall { pole: String, needed: usize, found: usize },

    #[error("word {0:?} qualifies as both a high and a low arousal seed")]
    SeedConflict(String),

    #[error("duplicate word {word:?} in {path} (lines {first} and {second})")]
    DuplicateWord {
        path: PathBuf,
        word: String,
        first: usize,
        second: usize,
    },

    #[error("rater word sets differ: only in first: {only_first:?}; only in second: {only_second:?}")]
    RaterMismatch {
        only_first: Vec<String>,
        only_second: Vec<String>,
    },

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
