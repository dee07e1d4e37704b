use crate::data::CaseId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no column named \"class\" in header")]
    MissingClassColumn,

    #[error("more than one column named \"class\" in header")]
    DuplicateClassColumn,

    #[error("dataset has no attribute columns")]
    NoAttributes,

    #[error("line {line}, column {column} ({name}): {message}")]
    Cell {
        line: u64,
        column: usize,
        name: String,
        message: String,
    },

    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("empty dataset: {0}")]
    Empty(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown case id {0}")]
    UnknownCase(CaseId),

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("purity report is stale for this dataset")]
    StaleReport,

    #[error("no least-pure cases; the overlap is empty")]
    EmptyOverlap,

    #[error("policy: {0}")]
    Policy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad input or configuration rather than by the
    /// environment failing underneath us.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Policy(_))
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
