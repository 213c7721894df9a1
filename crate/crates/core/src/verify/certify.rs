use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::bayes::{
    generic_bayes_bound, iterated_lpcb, linear_reference_bound, lpcb_optimize_beta,
    optimize_nonlinear_bound, phase_bound_large_sigma, tilted_prior_bound, ChainModel, LambdaMode,
    LinearGaussianModel, LpcbChain, NonlinearBayesModel,
};
use crate::divergences::Prior;
use crate::error::Result;
use crate::nonbayes::{
    scalar_linear_bound, scalar_ml_lambda, vector_linear_bound, vector_ml_lambda, VectorLinearModel,
};
use crate::optimize::maximize_log_scan;

use super::mc::{mc_lambda, McEstimator, McModel, McRun};

/// Slack for floating-point ties between a bound and an exact value.
const EXACT_SLACK: f64 = 1e-9;

/// One bound-versus-truth comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyCase {
    pub family: String,
    pub alpha: f64,
    pub bound: f64,
    pub truth: f64,
    /// Standard error of `truth`; 0 when it is exact.
    pub se: f64,
}

impl CertifyCase {
    /// `bound <= truth + 3 se` (plus a rounding slack).
    pub fn passed(&self) -> bool {
        self.bound <= self.truth + 3.0 * self.se + EXACT_SLACK * self.truth.abs().max(1.0)
    }
}

fn case(family: &str, alpha: f64, bound: f64, truth: f64, se: f64) -> CertifyCase {
    CertifyCase {
        family: family.to_string(),
        alpha,
        bound,
        truth,
        se,
    }
}

/// Relative positions in `(0, 1)` of the risk factors tried per model.
const FRACTIONS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn linear_gaussian_cases(out: &mut Vec<CertifyCase>) -> Result<()> {
    let truth = LinearGaussianModel::new(1.0, 2.0, 1.0)?;
    let chain_truth = ChainModel::Linear(truth);
    let gauss = Prior::gaussian(truth.sigma2)?;
    for f in FRACTIONS {
        let alpha = f * truth.alpha_c();
        let exact = truth.min_lambda(alpha);
        let b = generic_bayes_bound(alpha, truth.mmse(), 0.0)?;
        out.push(case("bayes-generic", alpha, b.value, exact, 0.0));
        for (s2, es) in [(0.5, 2.0), (2.0, 1.0), (1.5, 3.0)] {
            let reference = LinearGaussianModel::new(s2, es, truth.n0)?;
            let b = linear_reference_bound(&truth, &reference, alpha)?;
            out.push(case("bayes-linear-ref", alpha, b.value, exact, 0.0));
        }
        let reference = LinearGaussianModel::new(2.0, 0.5, truth.n0)?;
        let b = lpcb_optimize_beta(alpha, &reference, &chain_truth)?;
        out.push(case("bayes-lpcb", alpha, b.value, exact, 0.0));
        let mid = ChainModel::Linear(LinearGaussianModel::new(1.5, 1.0, truth.n0)?);
        let chain = LpcbChain::new(
            vec![0.3 * alpha, 0.2 * alpha, 0.1 * alpha],
            vec![chain_truth, mid, ChainModel::Linear(reference)],
        )?;
        out.push(case(
            "bayes-lpcb-iterated",
            alpha,
            iterated_lpcb(&chain, alpha)?.value,
            exact,
            0.0,
        ));
        let tilt = |beta: f64| {
            tilted_prior_bound(&gauss, alpha, beta, truth.es / truth.n0, 0.0)
                .map(|b| b.value)
                .unwrap_or(f64::NAN)
        };
        let best = maximize_log_scan(tilt, 1e-3, 1e3, 121, 1e-10).value;
        out.push(case("bayes-tilted", alpha, best, exact, 0.0));
    }
    let alpha = 0.5 * truth.alpha_c();
    let mc = mc_lambda(&McRun::new(
        McModel::LinearGaussian(truth),
        McEstimator::CondMean,
        alpha,
        100_000,
        11,
    )?)?;
    out.push(case(
        "bayes-generic-vs-mc",
        alpha,
        truth.mmse() * alpha,
        mc.lambda_hat,
        mc.se,
    ));
    Ok(())
}

fn phase_cases(out: &mut Vec<CertifyCase>) -> Result<()> {
    let (sigma2, ex, n0) = (0.5, 1.0, 0.5);
    let model = NonlinearBayesModel::phase(ex, n0, sigma2, 1.0, 2.0 * PI * 4.0, 1025)?;
    for f in [0.25, 0.5, 0.75] {
        let alpha = f / (2.0 * sigma2);
        let run = McRun::new(
            McModel::Phase { sigma2 },
            McEstimator::Zero,
            alpha,
            100_000,
            12,
        )?;
        let mc = mc_lambda(&run)?;
        let large = phase_bound_large_sigma(alpha, sigma2, ex / n0)?;
        out.push(case(
            "bayes-phase-large-sigma",
            alpha,
            large.value,
            run.exact(),
            0.0,
        ));
        let b = optimize_nonlinear_bound(&model, alpha, LambdaMode::Optimize)?;
        out.push(case("bayes-phase", alpha, b.value, run.exact(), 0.0));
        out.push(case(
            "bayes-phase-vs-mc",
            alpha,
            b.value,
            mc.lambda_hat,
            mc.se,
        ));
    }
    Ok(())
}

fn nonbayes_cases(out: &mut Vec<CertifyCase>) -> Result<()> {
    let (es, n0) = (2.0, 1.0);
    for f in [0.001, 0.1, 0.5, 0.75] {
        let alpha = f * es / n0;
        let b = scalar_linear_bound(alpha, es, n0)?;
        out.push(case(
            "nonbayes-linear",
            alpha,
            b.value,
            scalar_ml_lambda(alpha, es, n0)?,
            0.0,
        ));
        let run = McRun::new(
            McModel::ScalarNonBayes { theta: 0.4, es, n0 },
            McEstimator::Ml,
            alpha,
            100_000,
            13,
        )?;
        let mc = mc_lambda(&run)?;
        out.push(case(
            "nonbayes-linear-vs-mc",
            alpha,
            b.value,
            mc.lambda_hat,
            mc.se,
        ));
    }
    let gamma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.5, -0.2, 0.5, 1.0]);
    let model = VectorLinearModel::new(gamma, es, n0)?;
    let u = DVector::from_vec(vec![0.5, -1.0, 0.8]);
    let r = model.critical_radius(&u)?;
    for f in [0.1, 0.5, 0.9] {
        let a = &u * (f * r);
        let b = vector_linear_bound(&model, &a)?;
        out.push(case(
            "nonbayes-vector",
            f * r,
            b.value,
            vector_ml_lambda(&model, &a)?,
            0.0,
        ));
    }
    Ok(())
}

/// The default battery: every bound family that has an exact or simulated
/// truth, over a spread of risk factors below the critical value.
///
/// The rectangular-pulse delay bound and the delay reference-signal bound
/// have no simulated truth here and are not included.
pub fn certify_default() -> Result<Vec<CertifyCase>> {
    let mut out = Vec::new();
    linear_gaussian_cases(&mut out)?;
    phase_cases(&mut out)?;
    nonbayes_cases(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_battery_has_no_violations() {
        let cases = certify_default().unwrap();
        assert!(cases.len() > 40);
        let bad: Vec<_> = cases.iter().filter(|c| !c.passed()).collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn a_violation_is_detected() {
        assert!(!case("x", 1.0, 0.5, 0.4, 0.01).passed());
        assert!(case("x", 1.0, 0.42, 0.4, 0.01).passed());
    }
}
