use thiserror::Error;

use crate::scalar::ScalarError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scalar(#[from] ScalarError),

    #[error("{what} index {index} is outside the prepared range (available up to {available})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        available: usize,
    },

    #[error("invalid weight specification: {0}")]
    WeightSpec(String),

    #[error("operation requires {expected}, got {actual}")]
    WrongWeightMode {
        expected: &'static str,
        actual: String,
    },

    #[error("{what}: requested {requested} exceeds the validity window (max {limit})")]
    OutsideWindow {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    #[error("projection residual mismatch: pythagoras {pythagoras}, direct {direct}")]
    ResidualMismatch { pythagoras: String, direct: String },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("index map: {0}")]
    IndexMap(String),

    #[error("summability series not certified: {0}")]
    NonSummable(String),

    #[error("point {0} is outside the open unit disk")]
    OutsideDisk(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
