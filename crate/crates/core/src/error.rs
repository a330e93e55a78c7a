use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("cannot sample negatives: the only word in the vocabulary is the target")]
    CannotSampleNegatives,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("sequence of length {len} exceeds the brute-force limit of {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("unknown word id {0}")]
    UnknownId(usize),

    #[error("unknown token {0:?}")]
    UnknownToken(String),

    #[error("non-finite loss at example {index}")]
    NonFiniteLoss { index: usize },

    #[error("example has neither left nor right context")]
    EmptyContext,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("too few probe sentences: {found} usable, need at least {required}")]
    TooFewSentences { found: usize, required: usize },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("not a checkpoint (bad magic bytes)")]
    NotACheckpoint,

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checksum mismatch")]
    ChecksumMismatch,

    #[error("shape mismatch in {what}: expected {expected} values, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
