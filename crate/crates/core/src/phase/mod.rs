//! Large-`n` behaviour of the Bernoulli model under `alpha = a n`: the
//! optimal Bayesian error exponent `E(a)` with its estimator, and the
//! mean-field spin analogy for the empirical-mean estimator.

mod curie_weiss;
mod exponent;

pub use curie_weiss::{
    a0, classify_phase, magnetization_roots, magnetization_roots_with, phase_diagram,
    CurieWeissParams, Magnetization, MagnetizationRoot, Phase, PhaseLabel, PhaseRow, BOUNDARY_BAND,
    ROOT_SCAN_CELLS,
};
pub use exponent::{
    asymptotic_estimator, bernoulli_bayes_exponent, error_exponent, ExponentCurve, ExponentProblem,
    THETA_INSET,
};
