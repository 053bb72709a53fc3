use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// A caller-supplied parameter violates its contract.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Adaptive quadrature exhausted its subdivision budget before reaching
    /// the requested tolerance. Carries the best estimate and the achieved
    /// error bound so callers can decide whether the result is still usable.
    #[error(
        "quadrature did not converge: value ~{value}, achieved error {achieved}, requested {requested}"
    )]
    QuadratureDidNotConverge {
        value: f64,
        achieved: f64,
        requested: f64,
    },
}

impl CoreError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
