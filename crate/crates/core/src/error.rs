use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: expected {expected} columns, found {found}")]
    Schema {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("example {0} was already queried")]
    DuplicateQuery(usize),

    #[error("unknown example id {0}")]
    UnknownId(usize),

    #[error("labelling budget of {budget} queries exhausted")]
    BudgetExhausted { budget: usize },

    #[error("no unlabeled examples left to select from")]
    EmptyPool,

    #[error("need at least {need} labeled examples, have {have}")]
    InsufficientLabels { have: usize, need: usize },

    #[error("incompatible prediction vectors: {0}")]
    IncompatibleVectors(String),

    #[error("cosine alignment {0} lies outside [-1, 1]")]
    Domain(f64),

    #[error("non-finite value during {0}")]
    NumericOverflow(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
