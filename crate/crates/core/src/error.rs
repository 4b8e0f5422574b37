use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: label {value} is not binary (expected -1, +1, 0 or 1)")]
    NonBinaryLabel { row: usize, value: f64 },

    #[error("label column {column} out of range for {columns} columns")]
    LabelColumn { column: usize, columns: usize },

    #[error("dataset is empty")]
    Empty,

    #[error("dimension mismatch: expected {expected} attributes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("attribute index {index} out of range for {len} features")]
    AttributeOutOfRange { index: usize, len: usize },

    #[error("cannot build {folds} folds from {samples} samples")]
    TooFewSamples { samples: usize, folds: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside the domain of the bound: {0}")]
    Domain(String),

    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
