use thiserror::Error;

/// Errors raised by the kernel library.
///
/// The CLI maps [`HardyError::exit_code`] onto process exit statuses, so the
/// variants are grouped by what went wrong rather than where.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardyError {
    /// An argument lies outside the domain on which the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Gamma function argument hit a pole (a nonpositive integer).
    #[error("pole of the Gamma function at {0}")]
    Pole(f64),

    /// The requested coupling exceeds the critical value.
    #[error("coupling {kappa} exceeds the critical value {critical}")]
    Supercritical { kappa: f64, critical: f64 },

    /// An iterative procedure did not reach its tolerance.
    #[error("no convergence in {context}: {detail}")]
    Convergence { context: String, detail: String },

    /// An integrand or intermediate value became NaN or infinite.
    #[error("non-finite value in {context} at {at}")]
    NonFinite { context: String, at: f64 },

    /// A configuration key or value could not be understood.
    #[error("configuration error: {0}")]
    Config(String),
}

impl HardyError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HardyError::Domain(msg.into())
    }

    pub(crate) fn convergence(context: impl Into<String>, detail: impl Into<String>) -> Self {
        HardyError::Convergence {
            context: context.into(),
            detail: detail.into(),
        }
    }

    /// Process exit code associated with this error class: 2 for domain and
    /// configuration problems, 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HardyError::Domain(_)
            | HardyError::Pole(_)
            | HardyError::Supercritical { .. }
            | HardyError::Config(_) => 2,
            HardyError::Convergence { .. } | HardyError::NonFinite { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HardyError>;
