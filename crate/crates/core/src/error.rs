use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pool assignment has {pools} pools but the topology has {nodes} nodes")]
    LengthMismatch { pools: usize, nodes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("topology is not connected")]
    Disconnected,

    #[error("no connected graph generated after {attempts} attempts")]
    GenerationFailed { attempts: u32 },

    #[error("reconciliation of {diff} differences failed after {attempts} attempts (last sketch had {cells} cells)")]
    ReconcileFailed { diff: usize, attempts: u32, cells: usize },

    #[error("sketches are not comparable: {0}")]
    SketchMismatch(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
