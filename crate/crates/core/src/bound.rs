//! The extended-real bound record shared by every bound family.

use std::fmt;

use crate::optimize::bisect_onset;

/// How a bound value should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    /// A finite lower bound in nats.
    Finite,
    /// The bound is `+inf`: no estimator has a finite exponential moment.
    Divergent,
    /// The divergence term is infinite, so the bound says nothing (`-inf`).
    Useless,
    /// Parameters lie outside the validity window of a closed form. The
    /// value, when finite, is still a valid (but not optimized) bound.
    OutOfWindow,
}

impl BoundStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundStatus::Finite => "finite",
            BoundStatus::Divergent => "divergent",
            BoundStatus::Useless => "useless",
            BoundStatus::OutOfWindow => "out-of-window",
        }
    }
}

impl fmt::Display for BoundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimizer trace summary attached to a bound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub evaluations: usize,
    pub notes: Vec<String>,
}

/// A lower bound on `ln E exp{alpha (est - theta)^2}` together with the free
/// parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub status: BoundStatus,
    pub argmax: Vec<(String, f64)>,
    pub diagnostics: Diagnostics,
}

impl BoundValue {
    /// Classifies `value` by its sign at infinity.
    pub fn from_value(value: f64) -> Self {
        let status = if value == f64::INFINITY {
            BoundStatus::Divergent
        } else if value == f64::NEG_INFINITY || value.is_nan() {
            BoundStatus::Useless
        } else {
            BoundStatus::Finite
        };
        let value = if value.is_nan() {
            f64::NEG_INFINITY
        } else {
            value
        };
        Self {
            value,
            status,
            argmax: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn divergent() -> Self {
        Self::from_value(f64::INFINITY)
    }

    pub fn useless() -> Self {
        Self::from_value(f64::NEG_INFINITY)
    }

    pub fn with_arg(mut self, name: &str, value: f64) -> Self {
        self.argmax.push((name.to_string(), value));
        self
    }

    pub fn with_status(mut self, status: BoundStatus) -> Self {
        self.status = status;
        self
    }

    pub fn with_evaluations(mut self, n: usize) -> Self {
        self.diagnostics.evaluations += n;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.diagnostics.notes.push(note.into());
        self
    }

    pub fn arg(&self, name: &str) -> Option<f64> {
        self.argmax.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn is_divergent(&self) -> bool {
        self.value == f64::INFINITY
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Marks a finite value as out-of-window unless `inside`.
    pub fn with_window(self, inside: bool) -> Self {
        if inside || !self.is_finite() {
            self
        } else {
            self.with_status(BoundStatus::OutOfWindow)
        }
    }

    /// A bound is informative when it is strictly positive.
    pub fn is_nontrivial(&self) -> bool {
        self.value > 0.0
    }
}

/// Upper bound on the critical risk factor from any bound family: the
/// smallest `alpha` in `[lo, hi]` at which `bound(alpha)` diverges, located by
/// bisection to `tol`. `None` means no divergence up to `hi`.
pub fn alpha_c_by_bisection(
    bound: impl Fn(f64) -> BoundValue,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Option<f64> {
    bisect_onset(|a| bound(a).is_divergent(), lo, hi, tol)
}

/// Default tolerance for critical-risk-factor bisection.
pub const ALPHA_C_TOL: f64 = 1e-4;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(BoundValue::from_value(1.0).status, BoundStatus::Finite);
        assert_eq!(
            BoundValue::from_value(f64::INFINITY).status,
            BoundStatus::Divergent
        );
        assert_eq!(
            BoundValue::from_value(f64::NAN).status,
            BoundStatus::Useless
        );
        assert!(
            BoundValue::from_value(0.5)
                .with_arg("beta", 0.1)
                .arg("beta")
                == Some(0.1)
        );
    }

    #[test]
    fn bisection_on_synthetic_family() {
        let ac = alpha_c_by_bisection(
            |a| {
                if a >= 0.37 {
                    BoundValue::divergent()
                } else {
                    BoundValue::from_value(a)
                }
            },
            0.0,
            2.0,
            ALPHA_C_TOL,
        )
        .unwrap();
        assert!((ac - 0.37).abs() <= ALPHA_C_TOL);
    }
}
