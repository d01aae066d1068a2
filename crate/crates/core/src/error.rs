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

    #[error("io error: {0}")]
    Stream(#[from] std::io::Error),

    /// A malformed line in one of the text resources.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A SentiWordNet record whose scores violate the sum-to-one invariant.
    #[error("synset {synset_id} (line {line}): {message}")]
    InvalidSynset {
        synset_id: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("word not in lexicon: {0}")]
    NotInLexicon(String),

    #[error("unknown word: {0}")]
    UnknownWord(String),

    #[error("non-finite value in feature vector")]
    NonFinite,

    #[error("training data needs both classes")]
    NeedsBothClasses,

    #[error("empty batch")]
    EmptyBatch,

    #[error("unlabeled pool is empty")]
    EmptyPool,

    #[error("coreset requires labeled seeds")]
    NoLabeledSeeds,

    #[error("no model available for strategy {0}")]
    NoModel(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("session is {0}")]
    BadState(&'static str),

    #[error("oracle failed: {0}")]
    Oracle(String),

    #[error("empty intersection between label sets")]
    EmptyIntersection,

    #[error("{0}")]
    Mismatch(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
