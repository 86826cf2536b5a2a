use std::path::PathBuf;

/// Errors produced anywhere in the engine.
///
/// The variants map onto the CLI exit codes: usage/parse/range problems are
/// caller errors, `Unidentifiable` means the data cannot pin down the dropout
/// parameters, and `NumericRange`/`Consistency` are numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("numeric range error: {0}")]
    NumericRange(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("dropout parameters are unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("customer {customer}: {message}")]
    DateRange { customer: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
