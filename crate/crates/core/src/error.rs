use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdovError {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series could not be summed to the requested tolerance with the
    /// coefficients available.
    #[error("precision error: {0}")]
    Precision(String),
    /// The stick-breaking sampler exceeded its hard stick cap.
    #[error("pathological input: {0}")]
    Pathological(String),
}

pub type Result<T> = std::result::Result<T, PdovError>;

macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::error::PdovError::Domain(format!($($arg)*))
    };
}

macro_rules! ensure_domain {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::domain_err!($($arg)*));
        }
    };
}

pub(crate) use domain_err;
pub(crate) use ensure_domain;
