use crate::bound::BoundValue;
use crate::divergences::{gaussian_kl, GaussianPriorPair};
use crate::error::{domain, require_nonnegative, require_positive, Result};

/// `alpha * mse_lb - divergence`: the change-of-measure bound for a reference
/// model whose mean-square error is at least `mse_lb`.
///
/// An infinite divergence yields a useless (`-inf`) bound.
pub fn generic_bayes_bound(alpha: f64, mse_lb: f64, divergence: f64) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    require_nonnegative("mse_lb", mse_lb)?;
    if divergence.is_nan() || divergence < 0.0 {
        return Err(domain(format!("divergence must be >= 0, got {divergence}")));
    }
    if divergence == f64::INFINITY {
        return Ok(BoundValue::useless());
    }
    Ok(BoundValue::from_value(alpha * mse_lb - divergence))
}

/// `Theta ~ N(0, sigma2)` observed through `y(t) = Theta s(t) + n(t)` with
/// `∫ s^2 = es` and white noise of two-sided density `n0 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianModel {
    pub sigma2: f64,
    pub es: f64,
    pub n0: f64,
}

impl LinearGaussianModel {
    pub fn new(sigma2: f64, es: f64, n0: f64) -> Result<Self> {
        require_positive("sigma2", sigma2)?;
        require_nonnegative("es", es)?;
        require_positive("n0", n0)?;
        Ok(Self { sigma2, es, n0 })
    }

    /// Critical risk factor `1 / (2 sigma2) + es / n0`.
    pub fn alpha_c(&self) -> f64 {
        1.0 / (2.0 * self.sigma2) + self.es / self.n0
    }

    /// Posterior variance, equal to the minimum mean-square error.
    pub fn mmse(&self) -> f64 {
        self.sigma2 * self.n0 / (self.n0 + 2.0 * self.sigma2 * self.es)
    }

    /// Conditional-mean gain applied to the matched-filter output `∫ s y dt`.
    pub fn estimator_gain(&self) -> f64 {
        self.sigma2 / (self.sigma2 * self.es + 0.5 * self.n0)
    }

    /// Exact `ln E exp{alpha eps^2}` of the conditional-mean estimator.
    pub fn min_lambda(&self, alpha: f64) -> f64 {
        let x = alpha / self.alpha_c();
        if x >= 1.0 {
            f64::INFINITY
        } else {
            -0.5 * (-x).ln_1p()
        }
    }
}

/// The exact optimum `min Lambda_B = (1/2) ln(1 / (1 - alpha / alpha_c))`,
/// attained for every `alpha < alpha_c` by the conditional-mean estimator.
pub fn linear_gaussian_min_lambda(model: &LinearGaussianModel, alpha: f64) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    Ok(BoundValue::from_value(model.min_lambda(alpha))
        .with_arg("alpha_c", model.alpha_c())
        .with_arg("gain", model.estimator_gain()))
}

/// Change-of-measure bound for a linear-Gaussian truth with a linear-Gaussian
/// reference whose signal has the same shape: `alpha mmse(Q) - D(Q || P)`.
pub fn linear_reference_bound(
    truth: &LinearGaussianModel,
    reference: &LinearGaussianModel,
    alpha: f64,
) -> Result<BoundValue> {
    if truth.n0 != reference.n0 {
        return Err(domain("truth and reference must share n0"));
    }
    let prior = gaussian_kl(GaussianPriorPair::new(truth.sigma2, reference.sigma2)?);
    let gap = reference.es.sqrt() - truth.es.sqrt();
    let path = reference.sigma2 * gap * gap / truth.n0;
    Ok(generic_bayes_bound(alpha, reference.mmse(), prior + path)?
        .with_arg("sigma2_q", reference.sigma2)
        .with_arg("es_q", reference.es))
}
