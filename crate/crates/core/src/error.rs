use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// The CLI maps these one-to-one onto process exit statuses, so the variants
/// are deliberately coarse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no solution exists in this progression: {0}")]
    NoSolution(String),
    #[error("{what} exceeds the configured cap ({required} > {cap})")]
    CapExceeded {
        what: &'static str,
        required: String,
        cap: String,
    },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub(crate) fn cap(what: &'static str, required: impl ToString, cap: impl ToString) -> Self {
        Error::CapExceeded {
            what,
            required: required.to_string(),
            cap: cap.to_string(),
        }
    }
}
