use thiserror::Error;

/// Errors raised by the solvers, policies and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The belief or model state leaves the requested quantity undefined.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    /// The exact solver would need more states than the configured cap.
    #[error("state space too large: L = {size} exceeds cap {cap}")]
    StateSpaceTooLarge { size: String, cap: usize },

    /// Brute-force enumeration would visit more paths than allowed.
    #[error("enumeration too large: {paths} paths exceed cap {cap}")]
    EnumerationTooLarge { paths: String, cap: usize },

    #[error("quadrature failed to converge: estimated error {error:e} after {evaluations} evaluations")]
    Quadrature { error: f64, evaluations: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures of numerical routines (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_)
                | Error::StateSpaceTooLarge { .. }
                | Error::EnumerationTooLarge { .. }
                | Error::Quadrature { .. }
                | Error::NonConvergence { .. }
                | Error::NonFinite(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
