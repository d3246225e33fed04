use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {location}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        location: String,
        field: String,
        message: String,
    },

    #[error("{}: {location}: duplicate user id {id}", path.display())]
    DuplicateId {
        path: PathBuf,
        location: String,
        id: u64,
    },

    #[error("{}: {location}: user {id} has non-positive weight {weight}", path.display())]
    NonPositiveWeight {
        path: PathBuf,
        location: String,
        id: u64,
        weight: f64,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("Fibonacci index {0} overflows u64")]
    FibonacciOverflow(usize),

    #[error("evaluator returned NaN at index {0}")]
    NanValue(usize),

    #[error("point coincides with user {0}; Weiszfeld map undefined")]
    Coincident(u64),

    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),

    #[error("invalid cost tree: {0}")]
    InvalidTree(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
