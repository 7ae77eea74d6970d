use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid vertex id {id} (valid range 0..{n})")]
    InvalidVertex { id: usize, n: usize },

    #[error("{what} cap exceeded: needed {needed}, cap {cap}")]
    CapExceeded {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("conditioning event has zero mass: {0}")]
    ZeroMass(String),

    #[error("input graph is not a forest")]
    NotAForest,

    #[error("fewer than two free elements under the pinning")]
    FewerThanTwoFree,

    #[error("outside the uniqueness regime: {0}")]
    NotUnique(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
