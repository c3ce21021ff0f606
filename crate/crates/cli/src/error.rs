use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration. Exit code 2.
    #[error("usage error: {0}")]
    Usage(String),
    /// Unreadable or invalid input data. Exit code 3.
    #[error("data error: {0}")]
    Data(String),
    /// An estimator or solver failed on valid input. Exit code 4.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the message with `context`, keeping the category.
    pub(crate) fn context(self, context: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
            io @ CliError::Io { .. } => io,
        }
    }
}

impl From<bear_core::Error> for CliError {
    fn from(e: bear_core::Error) -> Self {
        use bear_core::Error as E;
        match e {
            E::Domain(m) => CliError::Usage(m),
            E::InvalidInput(m) => CliError::Data(m),
            E::Degenerate(m) | E::Numerical(m) => CliError::Numerical(m),
        }
    }
}
