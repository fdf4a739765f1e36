//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The input file contained no data rows.
    #[error("{path}: no data rows")]
    EmptyInput { path: PathBuf },

    /// A cell failed to parse as a finite number.
    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a finite number")]
    ParseCell {
        path: PathBuf,
        /// 1-based physical line number.
        row: usize,
        /// 1-based column number.
        col: usize,
        value: String,
    },

    /// A row had a different width than the first data row.
    #[error("{path}: row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        got: usize,
        expected: usize,
    },

    /// The requested label column does not exist.
    #[error("label column {column} out of range for input with {width} columns")]
    LabelColumnOutOfRange { column: usize, width: usize },

    /// A precondition on an argument was violated.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
