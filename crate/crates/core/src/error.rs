use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model or sample puts zero mass on one outcome class.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Estimator preconditions (balance, label set, subset) violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("bias grid cell (n={n}, lambda={lambda}, r={r}): {source}")]
    GridCell {
        n: u64,
        lambda: f64,
        r: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool.
    ///
    /// 1 usage error, 2 data error, 3 numeric/domain error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Parse { .. } | Error::Data(_) | Error::Io { .. } | Error::Csv(_) => 2,
            Error::Contract(_) => 2,
            Error::Domain(_) | Error::Degenerate(_) | Error::GridCell { .. } => 3,
        }
    }
}
