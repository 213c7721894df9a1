use crate::bound::BoundValue;
use crate::divergences::Prior;
use crate::error::{require_nonnegative, require_positive, Error, Result};

/// `alpha / (I(Q_beta) + 2 E_s/N0) - D(Q_beta || P) - corr_term`: the
/// Bayesian Cramér-Rao bound under the tilted prior `Q_beta`, paid for with
/// the prior divergence and the caller's signal-path divergence `corr_term`.
///
/// Fails with a regularity error when `Q_beta` does not vanish at the ends of
/// its support.
pub fn tilted_prior_bound(
    prior: &Prior,
    alpha: f64,
    beta: f64,
    es_over_n0: f64,
    corr_term: f64,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    require_positive("beta", beta)?;
    require_nonnegative("es_over_n0", es_over_n0)?;
    require_nonnegative("corr_term", corr_term)?;
    if !prior.vanishes_at_boundary(beta)? {
        return Err(Error::Regularity(format!(
            "tilted prior with beta = {beta} does not vanish at the support boundary"
        )));
    }
    let t = prior.tilt(beta)?;
    let value = alpha / (t.fisher_info + 2.0 * es_over_n0) - t.divergence() - corr_term;
    Ok(BoundValue::from_value(value)
        .with_arg("beta", beta)
        .with_arg("fisher_info", t.fisher_info)
        .with_arg("divergence", t.divergence()))
}

/// Upper bound on the critical risk factor from the tilted family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCUpper {
    /// `lim I(Q_beta) D(Q_beta || P)` as `beta -> beta0`, or `+inf`.
    pub value: f64,
    /// The tilt at which the Fisher information vanishes, if any.
    pub beta0: Option<f64>,
    /// Spread of the last two limit estimates.
    pub tolerance: f64,
    /// Smallest Fisher information seen over the sweep.
    pub min_fisher_info: f64,
}

/// Log-spaced tilts scanned for the vanishing of `I(Q_beta)`.
const BETA_SWEEP: (f64, f64, usize) = (1e-3, 1e3, 61);

/// Relative size of `I(Q_beta)` (against `I(P)`) treated as zero.
const FISHER_ZERO: f64 = 1e-6;

/// Evaluates `lim I(Q_beta) [(beta - 1) phi'(beta) - phi(beta)]` where
/// `I(Q_beta) -> 0`. Gaussian priors give `1 / (2 sigma2)` in closed form;
/// for grid priors the tilt is swept over `[1e-3, 1e3]` and `+inf` is
/// reported when no tilt drives the Fisher information to zero.
pub fn alpha_c_upper(prior: &Prior) -> Result<AlphaCUpper> {
    match prior {
        Prior::Gaussian { sigma2 } => Ok(AlphaCUpper {
            value: 1.0 / (2.0 * sigma2),
            beta0: Some(0.0),
            tolerance: 0.0,
            min_fisher_info: 0.0,
        }),
        Prior::Grid(_) => {
            if !prior.vanishes_at_boundary(1.0)? {
                return Err(Error::Regularity(
                    "prior does not vanish at the support boundary".into(),
                ));
            }
            let base_info = prior.tilt(1.0)?.fisher_info;
            let (lo, hi, n) = BETA_SWEEP;
            let mut samples = Vec::new();
            for k in 0..n {
                let beta = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
                if !prior.vanishes_at_boundary(beta)? {
                    continue;
                }
                let t = prior.tilt(beta)?;
                samples.push((beta, t.fisher_info, t.fisher_info * t.divergence()));
            }
            let Some(&(beta_min, info_min, _)) = samples.iter().min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                return Err(Error::Regularity("no admissible tilt in the sweep".into()));
            };
            if info_min > FISHER_ZERO * base_info {
                return Ok(AlphaCUpper {
                    value: f64::INFINITY,
                    beta0: None,
                    tolerance: 0.0,
                    min_fisher_info: info_min,
                });
            }
            // approach beta0 along the sweep
            let pos = samples.iter().position(|s| s.0 == beta_min).unwrap_or(0);
            let near: Vec<f64> = samples
                .iter()
                .skip(pos.saturating_sub(2))
                .take(5)
                .filter(|s| s.1 <= 10.0 * FISHER_ZERO * base_info)
                .map(|s| s.2)
                .collect();
            let value = samples[pos].2;
            let tolerance = near.iter().fold(0.0_f64, |m, v| m.max((v - value).abs()));
            Ok(AlphaCUpper {
                value,
                beta0: Some(beta_min),
                tolerance,
                min_fisher_info: info_min,
            })
        }
    }
}
