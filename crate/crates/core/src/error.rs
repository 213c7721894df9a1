use thiserror::Error;

/// Errors raised by bound evaluation, solvers and verification routines.
///
/// Divergent quantities are not errors: they travel as `f64::INFINITY`
/// inside [`crate::BoundValue`] and the divergence helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("regularity condition violated: {0}")]
    Regularity(String),

    #[error("degenerate signal: {0}")]
    Degenerate(String),

    #[error("refusing Monte Carlo run: {0}")]
    DivergenceRisk(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

pub(crate) fn require_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must be finite and >= 0, got {value}"
        )))
    }
}
