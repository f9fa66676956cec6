use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input word")]
    EmptyWord,

    #[error("word {0:?} contains whitespace")]
    Whitespace(String),

    #[error("marker collision: {text:?} contains reserved marker {marker:?}")]
    MarkerCollision { text: String, marker: String },

    #[error("invalid markers: {0}")]
    InvalidMarkers(String),

    #[error("merge count must be at least 1")]
    ZeroMerges,

    #[error("word {word:?} has frequency 0")]
    ZeroFrequency { word: String },

    #[error("script profile required for constrained BPE")]
    MissingProfile,

    #[error("script profile given for plain BPE")]
    UnexpectedProfile,

    #[error("unknown script profile {0:?}")]
    UnknownProfile(String),

    #[error("model uses script profile {model:?} but {given:?} was supplied")]
    ProfileMismatch { model: String, given: String },

    /// `line` is a 0-based index; the message counts from 1.
    #[error("dangling continuation at end of line {}", line + 1)]
    DanglingContinuation { line: usize },

    /// Indices are 0-based, as in trace files.
    #[error("trace mismatch at line index {line}, word index {word}: {reason}")]
    TraceMismatch {
        line: usize,
        word: usize,
        reason: String,
    },

    #[error("non-dense ranks: {0}")]
    NonDenseRanks(String),

    #[error("duplicate rank {0}")]
    DuplicateRank(usize),

    #[error("unsupported model file version {0:?}")]
    Version(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample of {requested} words requested but only {available} eligible")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("row {row}: score {score:?} outside 1..4")]
    ScoreOutOfRange { row: usize, score: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
