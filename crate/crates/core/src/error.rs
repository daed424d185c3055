use thiserror::Error;

/// Errors shared by every layer of the engine.
///
/// Truncation failures are always reported, never hidden: a result that
/// would need data beyond a declared cutoff or window is an error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} cutoff exceeded: needed {needed}, cutoff is {cutoff}")]
    CutoffExceeded {
        what: &'static str,
        needed: i64,
        cutoff: i64,
    },

    #[error("truncation window too small for variable {var}: {detail}")]
    WindowTooSmall { var: String, detail: String },

    #[error("unstable at cutoff {cutoff}: {trace}")]
    Unstable { cutoff: u32, trace: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("substitution by zero for variable {0}")]
    SubstitutionByZero(String),

    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("induced map not well defined: relation {0} does not vanish")]
    NotWellDefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
