use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}, record {record}: body id `{value}` is not a non-negative integer")]
    BodyId {
        path: PathBuf,
        record: usize,
        value: String,
    },
    #[error("{path}: duplicate body id {id}")]
    DuplicateBodyId { path: PathBuf, id: u64 },
    #[error("unknown stance `{0}`")]
    UnknownStance(String),
    #[error("{path}, record {record}: {message}")]
    Record {
        path: PathBuf,
        record: usize,
        message: String,
    },
    #[error("stance rows reference missing body ids: {0:?}")]
    DanglingBodyIds(Vec<u64>),

    #[error("cannot fit a vectorizer on an empty corpus")]
    EmptyCorpus,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("rank {k_max} out of range (must be between 1 and {max})")]
    RankOutOfRange { k_max: usize, max: usize },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("unknown feature mode `{0}`")]
    UnknownFeatureMode(String),

    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("length mismatch: {left} truths vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },
    #[error("confusion matrix is empty")]
    EmptyConfusion,
}
