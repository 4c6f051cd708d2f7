use thiserror::Error;

use crate::geometry::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell (row {}, col {}) is outside the {height}x{width} map", cell.row, cell.col)]
    OutOfBounds {
        cell: Cell,
        width: usize,
        height: usize,
    },

    #[error("target coincides with the current position")]
    DegenerateTarget,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("map format: {0}")]
    Map(#[from] MapError),

    #[error("no goal is reachable from the start cell")]
    NoPath,

    #[error("invalid detection: {0}")]
    InvalidDetection(String),
}

/// Defects found while reading the ASCII map format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("map text is empty")]
    Empty,
    #[error("no start cell ('M')")]
    NoStart,
    #[error("multiple start cells ('M') at row {}, col {} and row {}, col {}", first.row, first.col, second.row, second.col)]
    MultipleStarts { first: Cell, second: Cell },
    #[error("no goal cell ('E')")]
    NoGoal,
    #[error("unknown character {ch:?} at row {row}, col {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("{0}")]
    Invalid(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
