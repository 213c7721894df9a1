//! Bayesian lower bounds on `Lambda_B = min ln E exp{alpha (est - Theta)^2}`.
//!
//! Every family follows the same change-of-measure pattern: pick a reference
//! model `Q` whose mean-square error floor is known, then pay for the change
//! of measure with a KL or Rényi divergence. Free parameters of `Q` are
//! exposed and each family has an optimizer over them.

mod linear;
mod lpcb;
mod nonlinear;
mod tilted;
mod ww;

pub use linear::{
    generic_bayes_bound, linear_gaussian_min_lambda, linear_reference_bound, LinearGaussianModel,
};
pub use lpcb::{
    chain_renyi, iterated_lpcb, lpcb_bound, lpcb_optimize_beta, lpcb_sweep, ChainModel, LpcbChain,
    TruthModel, BETA_BRACKET_MARGIN,
};
pub use nonlinear::{
    nonlinear_linear_ref_bound, optimal_reference_signal, optimize_nonlinear_bound,
    phase_bound_large_sigma, phase_correlation_energy, LambdaMode, NonlinearBayesModel,
    SignalFamily,
};
pub use tilted::{alpha_c_upper, tilted_prior_bound, AlphaCUpper};
pub use ww::{ww_rect_delay_bound, ww_tau_opt, WW_MSE_COEF};
