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

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}: label {value:?} is not one of 0, 1, -1, +1")]
    InvalidLabel { row: usize, value: String },

    #[error("line {line}: malformed index:value pair {token:?}")]
    MalformedPair { line: usize, token: String },

    #[error("line {line}: feature index {index} does not increase (previous {previous})")]
    NonIncreasingIndex {
        line: usize,
        index: usize,
        previous: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("variant {variant} requires the l1 penalty, got {penalty}")]
    IncompatibleVariant {
        variant: &'static str,
        penalty: &'static str,
    },

    #[error("line search failed after {backtracks} backtracks (last L = {last_l:e})")]
    LineSearchFailed { last_l: f64, backtracks: usize },

    #[error("gradient of the loss vanishes at the origin; lambda_max is undefined")]
    ZeroGradientAtOrigin,

    #[error("path point at fraction {fraction}: {source}")]
    PathPoint {
        fraction: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
