use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("confusion set references unknown character {0:?}")]
    UnknownCharacter(char),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("character id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("unsupported checkpoint format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated checkpoint")]
    TruncatedCheckpoint,

    #[error("checkpoint dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a checkpoint file (bad magic)")]
    BadMagic,

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
