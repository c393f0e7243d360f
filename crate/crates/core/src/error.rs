use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value {value} does not fit in {width} bits")]
    Overflow { value: u64, width: u32 },

    #[error("truncated stream at bit {offset}")]
    TruncatedStream { offset: usize },

    #[error("malformed code at bit {offset}: {reason}")]
    MalformedCode { offset: usize, reason: String },

    #[error("decode error at bit {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("spherical compression gave up after {trials} trials")]
    GiveUp { trials: u64 },

    #[error("deadline reached after {trials} trials")]
    Deadline { trials: u64 },

    #[error("{routine} did not converge after {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            reason: err.to_string(),
        }
    }
}
