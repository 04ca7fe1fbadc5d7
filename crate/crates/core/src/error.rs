use alloc::string::String;

/// Errors produced by the algorithms in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed input: wrong lengths, bad sums, out-of-range parameters.
    #[error("validation error: {0}")]
    Validation(String),
    /// Input is well formed but outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request exceeds what exact enumeration will handle.
    #[error("capacity error: {what} has {size}, limit is {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    /// A boosting distribution could not be constructed.
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    /// An iterative procedure failed to converge or cannot make progress.
    #[error("convergence error: {0}")]
    Convergence(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical procedure rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence(_) | Error::DegenerateSplit(_))
    }

    /// Prefixes the message with extra context, keeping the variant.
    pub fn context(self, ctx: &str) -> Self {
        use alloc::format;
        match self {
            Error::Validation(m) => Error::Validation(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::DegenerateSplit(m) => Error::DegenerateSplit(format!("{ctx}: {m}")),
            Error::Convergence(m) => Error::Convergence(format!("{ctx}: {m}")),
            e @ Error::Capacity { .. } => e,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
