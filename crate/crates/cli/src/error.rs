use std::path::PathBuf;

/// Failures of the experiment runner. Each maps to its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    /// A checked property did not hold. CSVs are written before this is
    /// raised so the offending rows can be inspected.
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("model failure: {0}")]
    Model(srep::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Invalid(_) => 3,
            CliError::CheckFailed(_) => 4,
            CliError::Invariant(_) => 5,
            CliError::Model(_) => 6,
            CliError::Io { .. } => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<srep::Error> for CliError {
    fn from(e: srep::Error) -> Self {
        match e {
            srep::Error::InvalidParameter(m) => CliError::Invalid(m),
            srep::Error::InvariantViolated(m) => CliError::Invariant(m),
            other => CliError::Model(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
