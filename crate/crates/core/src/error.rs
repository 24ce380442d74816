use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} is {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    /// Indices are reported 1-based, matching word-line / bit-line numbering.
    #[error("nonpositive conductance at ({row},{col}): {value}")]
    NonpositiveConductance { row: usize, col: usize, value: f64 },

    #[error("non-finite value in {field} at ({row},{col})")]
    NonFinite {
        field: &'static str,
        row: usize,
        col: usize,
    },

    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("parse error at row {row} col {col}: {reason}")]
    Parse { row: usize, col: usize, reason: String },

    #[error("negative value at row {row} col {col}: {value}")]
    NegativeValue { row: usize, col: usize, value: f64 },

    #[error("pivot breakdown at row {row}: |pivot| = {pivot:e} below threshold {threshold:e}")]
    PivotBreakdown { row: usize, pivot: f64, threshold: f64 },

    #[error("singular matrix: zero pivot in column {col}")]
    Singular { col: usize },

    #[error("system of order {order} exceeds the dense oracle limit of {limit}")]
    OracleLimit { order: usize, limit: usize },

    #[error("tile {tile} failed: {source}")]
    Tile {
        tile: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown node name {0:?}")]
    UnknownNode(String),

    #[error("empty voltage table")]
    EmptyTable,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn mismatch(what: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::PivotBreakdown { .. } | Error::Singular { .. } => true,
            Error::Tile { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
