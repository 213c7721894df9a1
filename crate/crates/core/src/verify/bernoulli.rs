use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::grid::Grid;
use crate::phase::{asymptotic_estimator, THETA_INSET};

/// Largest sample size accepted by the exact sums.
pub const MAX_N: usize = 100_000;

/// `n` Bernoulli(`theta`) draws scored by `estimator[k]` when `k` ones are seen,
/// with risk factor `alpha = a n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliExact {
    n: usize,
    a: f64,
    theta: f64,
    estimator: Vec<f64>,
}

fn check_na(n: usize, a: f64) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(domain(format!("n must lie in [1, {MAX_N}], got {n}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(domain(format!("a must be finite and nonnegative, got {a}")));
    }
    Ok(())
}

impl BernoulliExact {
    /// `estimator(q)` is evaluated at `q = k / n`.
    pub fn with_estimator(
        n: usize,
        a: f64,
        theta: f64,
        estimator: impl Fn(f64) -> f64 + Sync,
    ) -> Result<Self> {
        check_na(n, a)?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(domain(format!("theta must lie in [0, 1], got {theta}")));
        }
        let estimator: Vec<f64> = (0..=n)
            .into_par_iter()
            .map(|k| estimator(k as f64 / n as f64))
            .collect();
        if estimator.iter().any(|t| !t.is_finite()) {
            return Err(domain("estimator values must be finite"));
        }
        Ok(Self {
            n,
            a,
            theta,
            estimator,
        })
    }

    /// The empirical frequency `theta_hat = q`.
    pub fn empirical(n: usize, a: f64, theta: f64) -> Result<Self> {
        Self::with_estimator(n, a, theta, |q| q)
    }

    /// The asymptotically optimal Bayesian estimator for the same `a`.
    pub fn asymptotic(n: usize, a: f64, theta: f64) -> Result<Self> {
        check_na(n, a)?;
        let est: Vec<f64> = (0..=n)
            .into_par_iter()
            .map(|k| asymptotic_estimator(k as f64 / n as f64, a))
            .collect::<Result<_>>()?;
        Self::with_table(n, a, theta, est)
    }

    pub fn with_table(n: usize, a: f64, theta: f64, estimator: Vec<f64>) -> Result<Self> {
        if estimator.len() != n + 1 {
            return Err(Error::Shape(format!(
                "estimator table needs {} entries, got {}",
                n + 1,
                estimator.len()
            )));
        }
        let table = estimator.clone();
        Self::with_estimator(n, a, theta, move |q| table[(q * n as f64).round() as usize])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn estimator(&self) -> &[f64] {
        &self.estimator
    }

    fn at_theta(&self, theta: f64) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }
}

fn lse(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln C(n, k)` for `k = 0..=n`.
fn log_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut c = 0.0;
    out.push(c);
    for k in 0..n {
        c += ((n - k) as f64).ln() - ((k + 1) as f64).ln();
        out.push(c);
    }
    out
}

/// Log-probabilities of the binomial counts.
fn log_pmf(n: usize, theta: f64, lbin: &[f64]) -> Vec<f64> {
    let (lt, lc) = (theta.ln(), (-theta).ln_1p());
    (0..=n)
        .map(|k| {
            let ones = if k == 0 { 0.0 } else { k as f64 * lt };
            let zeros = if k == n { 0.0 } else { (n - k) as f64 * lc };
            lbin[k] + ones + zeros
        })
        .collect()
}

/// Exact `ln E_theta exp{a n (theta_hat - theta)^2}` by a log-space binomial sum.
pub fn bernoulli_exact_lambda(spec: &BernoulliExact) -> Result<f64> {
    let lbin = log_binomials(spec.n);
    let mut lp = log_pmf(spec.n, spec.theta, &lbin);
    // ln C(n, k) reaches ~0.7 n, so the raw masses carry ~n ulp of error;
    // renormalizing restores a unit sum to rounding
    let total = lse(lp.iter().copied());
    if total.abs() > 1e-8 {
        return Err(Error::Resolution(format!(
            "binomial probabilities sum to exp({total})"
        )));
    }
    lp.iter_mut().for_each(|l| *l -= total);
    let alpha = spec.a * spec.n as f64;
    Ok(lse(lp.iter().zip(&spec.estimator).map(|(l, t)| {
        let d = t - spec.theta;
        l + alpha * d * d
    })))
}

/// `ln ∫ E_theta exp{a n (theta_hat - theta)^2} d theta` under a uniform prior,
/// by trapezoid quadrature over `points` values of `theta`.
pub fn bernoulli_bayes_lambda(spec: &BernoulliExact, points: usize) -> Result<f64> {
    let g = Grid::new(THETA_INSET, 1.0 - THETA_INSET, points)?;
    let logs: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| {
            bernoulli_exact_lambda(&spec.at_theta(g.point(i)))
                .map(|v| v + g.trapezoid_weight(i).ln())
        })
        .collect::<Result<_>>()?;
    Ok(lse(logs.into_iter()))
}

/// `max_q [a (q - theta)^2 - D(q || theta)]` on a fine grid with golden polish:
/// the growth rate of the exact sum for `theta_hat = q`.
pub fn empirical_exponent(a: f64, theta: f64) -> f64 {
    use crate::divergences::binary_divergence;
    use crate::optimize::maximize_scan;
    maximize_scan(
        |q| a * (q - theta) * (q - theta) - binary_divergence(q, theta),
        0.0,
        1.0,
        10_001,
        1e-12,
    )
    .value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_risk_factor() {
        let s = BernoulliExact::with_estimator(50, 0.0, 0.2, |q| 1.0 - q).unwrap();
        assert!(bernoulli_exact_lambda(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn small_n_matches_direct_sum() {
        let s = BernoulliExact::empirical(6, 0.7, 0.35).unwrap();
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        let direct: f64 = (0..=6)
            .map(|k| {
                let q = k as f64 / 6.0;
                binom[k]
                    * 0.35f64.powi(k as i32)
                    * 0.65f64.powi(6 - k as i32)
                    * (4.2 * (q - 0.35) * (q - 0.35)).exp()
            })
            .sum();
        assert!((bernoulli_exact_lambda(&s).unwrap() - direct.ln()).abs() < 1e-13);
    }

    #[test]
    fn converges_to_exponent() {
        let (a, theta) = (1.0, 0.3);
        let e = empirical_exponent(a, theta);
        assert!(e.abs() < 1e-12);
        let gap = |n: usize| {
            let l =
                bernoulli_exact_lambda(&BernoulliExact::empirical(n, a, theta).unwrap()).unwrap();
            (l / n as f64 - e).abs()
        };
        let (g200, g400) = (gap(200), gap(400));
        assert!(g200 <= 0.05);
        assert!((1.5..=3.0).contains(&(g200 / g400)), "{}", g200 / g400);
    }

    #[test]
    fn large_n_and_endpoints() {
        let s = BernoulliExact::empirical(MAX_N, 0.5, 0.4).unwrap();
        assert!(bernoulli_exact_lambda(&s).unwrap().is_finite());
        let s = BernoulliExact::empirical(10, 1.0, 0.0).unwrap();
        assert_eq!(bernoulli_exact_lambda(&s).unwrap(), 0.0);
        assert!(BernoulliExact::empirical(MAX_N + 1, 0.5, 0.4).is_err());
    }

    #[test]
    fn optimal_estimator_wins_past_two() {
        let n = 400;
        let opt = bernoulli_bayes_lambda(&BernoulliExact::asymptotic(n, 10.0, 0.5).unwrap(), 2001)
            .unwrap();
        let emp = bernoulli_bayes_lambda(&BernoulliExact::empirical(n, 10.0, 0.5).unwrap(), 2001)
            .unwrap();
        assert!(opt <= emp, "{opt} vs {emp}");
    }
}
