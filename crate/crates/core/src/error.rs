use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps onto one CLI exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Evaluation outside the domain of an operation (division by zero,
    /// square root of a non-positive series, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A nondegeneracy hypothesis failed (vanishing derivative, zero
    /// discriminant, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The input does not satisfy the hypotheses of the requested operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two independent computation routes disagree.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::Domain(_) | Error::Degenerate(_) | Error::Precondition(_) => 3,
            Error::Consistency(_) => 4,
        }
    }

    /// Short machine-readable tag used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Parse { .. } => "parse",
            Error::Domain(_) => "domain",
            Error::Degenerate(_) => "degenerate",
            Error::Precondition(_) => "precondition",
            Error::Consistency(_) => "consistency",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
