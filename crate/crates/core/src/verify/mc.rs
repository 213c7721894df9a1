use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bayes::LinearGaussianModel;
use crate::error::{domain, require_positive, Error, Result};

/// Number of batches for the batch-means standard error.
pub const BATCHES: usize = 20;

/// Fraction of the divergence threshold above which sampling is refused.
pub const ALPHA_MARGIN: f64 = 0.8;

/// Largest single-sample share of the sum before the interval is flagged.
pub const HEAVY_TAIL_SHARE: f64 = 0.01;

pub const MIN_SAMPLES: usize = 1000;

/// Models with a sufficient statistic that can be drawn exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McModel {
    /// `Theta ~ N(0, sigma2)`, `z = Theta E_s + N(0, E_s N0 / 2)`.
    LinearGaussian(LinearGaussianModel),
    /// Phase estimation with a `N(0, sigma2)` prior. Only the trivial
    /// estimator is simulated, so the observation is never drawn.
    Phase { sigma2: f64 },
    /// Fixed `theta`, `z = theta E_s + N(0, E_s N0 / 2)`.
    ScalarNonBayes { theta: f64, es: f64, n0: f64 },
}

impl McModel {
    pub fn id(&self) -> &'static str {
        match self {
            McModel::LinearGaussian(_) => "lin-gauss",
            McModel::Phase { .. } => "phase",
            McModel::ScalarNonBayes { .. } => "nonbayes-linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McEstimator {
    /// `E{Theta | z}`.
    CondMean,
    /// `theta_hat = 0`.
    Zero,
    /// `z / E_s`.
    Ml,
}

impl McEstimator {
    pub fn id(&self) -> &'static str {
        match self {
            McEstimator::CondMean => "cond-mean",
            McEstimator::Zero => "zero",
            McEstimator::Ml => "ml",
        }
    }
}

/// One Monte Carlo estimate of `ln E exp{alpha err^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRun {
    model: McModel,
    estimator: McEstimator,
    alpha: f64,
    n_samples: usize,
    master_seed: u64,
}

impl McRun {
    pub fn new(
        model: McModel,
        estimator: McEstimator,
        alpha: f64,
        n_samples: usize,
        master_seed: u64,
    ) -> Result<Self> {
        require_positive("alpha", alpha)?;
        if n_samples < MIN_SAMPLES {
            return Err(domain(format!(
                "need at least {MIN_SAMPLES} samples, got {n_samples}"
            )));
        }
        let ok = matches!(
            (model, estimator),
            (
                McModel::LinearGaussian(_),
                McEstimator::CondMean | McEstimator::Zero | McEstimator::Ml
            ) | (McModel::Phase { .. }, McEstimator::Zero)
                | (McModel::ScalarNonBayes { .. }, McEstimator::Ml)
        );
        if !ok {
            return Err(domain(format!(
                "estimator {} is not available for model {}",
                estimator.id(),
                model.id()
            )));
        }
        if let McModel::Phase { sigma2 } = model {
            require_positive("sigma2", sigma2)?;
        }
        if let McModel::ScalarNonBayes { es, n0, .. } = model {
            require_positive("es", es)?;
            require_positive("n0", n0)?;
        }
        let run = Self {
            model,
            estimator,
            alpha,
            n_samples,
            master_seed,
        };
        let limit = ALPHA_MARGIN * run.threshold();
        if alpha > limit {
            return Err(Error::DivergenceRisk(format!(
                "alpha = {alpha} exceeds {ALPHA_MARGIN} x the divergence threshold {}",
                run.threshold()
            )));
        }
        Ok(run)
    }

    pub fn model(&self) -> McModel {
        self.model
    }

    pub fn estimator(&self) -> McEstimator {
        self.estimator
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Variance of the (Gaussian) estimation error.
    pub fn error_variance(&self) -> f64 {
        match (self.model, self.estimator) {
            (McModel::LinearGaussian(m), McEstimator::CondMean) => m.mmse(),
            (McModel::LinearGaussian(m), McEstimator::Zero) => m.sigma2,
            (McModel::LinearGaussian(m), McEstimator::Ml) => m.n0 / (2.0 * m.es),
            (McModel::Phase { sigma2 }, _) => sigma2,
            (McModel::ScalarNonBayes { es, n0, .. }, _) => n0 / (2.0 * es),
        }
    }

    /// `alpha` at which the exponential moment diverges: `1 / (2 var)`.
    pub fn threshold(&self) -> f64 {
        1.0 / (2.0 * self.error_variance())
    }

    /// Closed form `-1/2 ln(1 - 2 alpha var)` of the simulated quantity.
    pub fn exact(&self) -> f64 {
        -0.5 * (-2.0 * self.alpha * self.error_variance()).ln_1p()
    }

    fn error(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        match (self.model, self.estimator) {
            (McModel::LinearGaussian(m), est) => {
                let theta = m.sigma2.sqrt() * normal();
                let z = theta * m.es + (m.es * m.n0 / 2.0).sqrt() * normal();
                let est = match est {
                    McEstimator::CondMean => m.estimator_gain() * z,
                    McEstimator::Zero => 0.0,
                    McEstimator::Ml => z / m.es,
                };
                est - theta
            }
            (McModel::Phase { sigma2 }, _) => -sigma2.sqrt() * normal(),
            (McModel::ScalarNonBayes { theta, es, n0 }, _) => {
                let z = theta * es + (es * n0 / 2.0).sqrt() * normal();
                z / es - theta
            }
        }
    }
}

/// Empirical `ln mean exp{alpha err^2}` with batch-means diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub lambda_hat: f64,
    /// Standard error of `lambda_hat` from the spread of the batch means.
    pub se: f64,
    /// Largest single summand over the total.
    pub max_share: f64,
    /// `max_share > HEAVY_TAIL_SHARE`; the interval is then not trustworthy.
    pub heavy_tail: bool,
}

impl McResult {
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.lambda_hat - value).abs() <= k * self.se
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Pairwise log-sum-exp in fixed order.
fn pairwise_lse(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NEG_INFINITY,
        1 => v[0],
        n => log_add(pairwise_lse(&v[..n / 2]), pairwise_lse(&v[n / 2..])),
    }
}

/// Draws `n_samples` errors in [`BATCHES`] batches. Batch `b` uses the ChaCha8
/// stream `b` of `master_seed`, so results do not depend on the worker count.
pub fn mc_lambda(run: &McRun) -> Result<McResult> {
    let per = run.n_samples / BATCHES;
    let extra = run.n_samples % BATCHES;
    // (log-sum, max log-summand, count) per batch
    let batches: Vec<(f64, f64, usize)> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(run.master_seed);
            rng.set_stream(b as u64);
            let n = per + usize::from(b < extra);
            let terms: Vec<f64> = (0..n)
                .map(|_| {
                    let e = run.error(&mut rng);
                    run.alpha * e * e
                })
                .collect();
            let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (pairwise_lse(&terms), max, n)
        })
        .collect();
    let total: Vec<f64> = batches.iter().map(|b| b.0).collect();
    let lse = pairwise_lse(&total);
    let lambda_hat = lse - (run.n_samples as f64).ln();
    let ratios: Vec<f64> = batches
        .iter()
        .map(|&(s, _, n)| (s - (n as f64).ln() - lambda_hat).exp())
        .collect();
    let mean = ratios.iter().sum::<f64>() / BATCHES as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    let se = (var / BATCHES as f64).sqrt();
    let max_share = batches
        .iter()
        .map(|b| (b.1 - lse).exp())
        .fold(0.0, f64::max);
    Ok(McResult {
        lambda_hat,
        se,
        max_share,
        heavy_tail: max_share > HEAVY_TAIL_SHARE,
    })
}
