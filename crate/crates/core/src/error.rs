use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants fall into three groups that callers (notably the CLI) map to
/// distinct exit paths: model validation, non-convergence, and everything else.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model at {path}: {reason}")]
    InvalidModel { path: String, reason: String },

    #[error("unknown point label '{label}' at {path}")]
    UnknownLabel { path: String, label: String },

    #[error("objects live on different spaces ({context})")]
    SpaceMismatch { context: String },

    #[error("{op} requires a positive submeasure")]
    NotPositive { op: &'static str },

    #[error("precondition of {op} violated: {reason}")]
    Precondition { op: &'static str, reason: String },

    #[error("missing limit fiber data for target point '{label}'; the model must declare it")]
    MissingLimitFiber { label: String },

    #[error("{op} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("generator enumeration would produce {count} generators (cap {cap})")]
    TooManyGenerators { count: f64, cap: usize },

    #[error("sequence norms are not uniformly bounded: norm {norm} exceeds bound {bound}")]
    UnboundedNorm { norm: f64, bound: f64 },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("json error at {path}: {message}")]
    Json { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidModel {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn precondition(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            reason: reason.into(),
        }
    }

    /// True for errors that describe a malformed or inconsistent input model.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel { .. }
                | Error::UnknownLabel { .. }
                | Error::SpaceMismatch { .. }
                | Error::MissingLimitFiber { .. }
                | Error::Json { .. }
        )
    }

    /// True for iterative procedures that ran out of budget.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
