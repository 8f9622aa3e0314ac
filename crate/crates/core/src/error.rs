use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} id {id} out of range (size {size})")]
    OutOfRange { what: &'static str, id: usize, size: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("need at least {needed} vectors to fit {needed} components, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("zero vector for document {0}")]
    ZeroVector(usize),

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("truncated file while reading {0}")]
    Truncated(&'static str),

    #[error("inconsistent header: {0}")]
    Header(String),

    #[error("vocabulary checksum mismatch: model {model:016x}, corpus {corpus:016x}")]
    VocabularyMismatch { model: u64, corpus: u64 },

    #[error("metric {metric} is not available for a {mode} classifier")]
    MetricMismatch { metric: &'static str, mode: &'static str },

    #[error("missing labels: {0}")]
    MissingLabels(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
