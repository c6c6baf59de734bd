use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Input data violates a structural invariant (asymmetry, bad length, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// A matrix that should be positive definite failed to factor.
    #[error("numerical error: {context} (last jitter tried: {jitter:e})")]
    Numerical { context: String, jitter: f64 },
    #[error("undefined value: {0}")]
    Undefined(String),
    /// Inputs are individually valid but do not fit together.
    #[error("state error: {0}")]
    State(String),
}

impl Error {
    /// Prefixes the message of a numerical error with more context.
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            Error::Numerical { context, jitter } => {
                Error::Numerical { context: alloc::format!("{ctx}: {context}"), jitter }
            }
            other => other,
        }
    }
}
