use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("only memory m = 1 is supported here, got m = {0}")]
    UnsupportedMemory(usize),

    #[error("row index {index} out of range for a stacked protograph with {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("overlap parameter {0} cannot be resolved from the table")]
    Unresolved(String),

    #[error("unsupported cycle length {0} (only 4 and 6 are counted)")]
    UnsupportedCycleLength(usize),

    #[error("circulant ({row}, {col}) has no power assigned")]
    MissingPower { row: usize, col: usize },

    #[error("infeasible degree distribution: {0}")]
    Infeasible(String),

    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("initial circulant powers already contain {0} lifted cycles-4")]
    HasFourCycles(u64),

    #[error("replica {index} out of range 1..={len}")]
    ReplicaOutOfRange { index: usize, len: usize },

    #[error("inconsistent column-type counts: {0}")]
    InconsistentCounts(String),
}

impl Error {
    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
