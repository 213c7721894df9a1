//! Ground truth for the bounds: Monte Carlo exponential moments through
//! exact sufficient statistics, exact finite-`n` Bernoulli sums, the
//! risk-sensitive posterior estimator, and a bound-versus-truth battery.

mod bernoulli;
mod certify;
mod mc;
mod posterior;

pub use bernoulli::{
    bernoulli_bayes_lambda, bernoulli_exact_lambda, empirical_exponent, BernoulliExact, MAX_N,
};
pub use certify::{certify_default, CertifyCase};
pub use mc::{
    mc_lambda, McEstimator, McModel, McResult, McRun, ALPHA_MARGIN, BATCHES, HEAVY_TAIL_SHARE,
    MIN_SAMPLES,
};
pub use posterior::{risk_sensitive_posterior_estimator, Posterior, PosteriorEstimate};
