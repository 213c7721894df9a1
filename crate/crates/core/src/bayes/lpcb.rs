//! Logarithmic probability comparison bounds: the change of measure with a
//! Rényi divergence of order `alpha / beta` in place of the KL divergence,
//! and its iterated form through a chain of intermediate models.

use rayon::prelude::*;

use crate::bayes::LinearGaussianModel;
use crate::bound::BoundValue;
use crate::divergences::{renyi_gaussian_linear, RenyiGaussianParams, RenyiOrder};
use crate::error::{domain, require_nonnegative, require_positive, Result};
use crate::optimize::maximize_log_scan;

/// Relative inset of the `beta` search bracket from `0` and `alpha`.
pub const BETA_BRACKET_MARGIN: f64 = 1e-6;

/// A model in an LPCB chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainModel {
    /// `Theta ~ N(0, sigma2)`, `y = x(t, Theta) + n` with `∫ x^2 = ex` and
    /// `∫ x dt = q_const` for every `Theta`, over `[0, t_horizon]`.
    ConstantEnergy {
        sigma2: f64,
        ex: f64,
        n0: f64,
        q_const: f64,
        t_horizon: f64,
    },
    /// A linear-Gaussian model whose signal is a DC level of energy `es`.
    Linear(LinearGaussianModel),
}

/// The model the data actually follow.
pub type TruthModel = ChainModel;

impl ChainModel {
    /// Constant-energy model with a signal orthogonal to DC (`q_const = 0`).
    pub fn constant_energy(sigma2: f64, ex: f64, n0: f64) -> Result<Self> {
        require_positive("sigma2", sigma2)?;
        require_nonnegative("ex", ex)?;
        require_positive("n0", n0)?;
        Ok(ChainModel::ConstantEnergy {
            sigma2,
            ex,
            n0,
            q_const: 0.0,
            t_horizon: 1.0,
        })
    }

    pub fn n0(&self) -> f64 {
        match self {
            ChainModel::ConstantEnergy { n0, .. } => *n0,
            ChainModel::Linear(m) => m.n0,
        }
    }
}

/// `a D_a(next || prev)`. The target `next` must be linear-Gaussian; the
/// source may be either kind. Linear-to-linear pairs share the DC signal
/// shape, so their path divergence uses `(sqrt(E2) - sqrt(E1))^2`.
pub fn chain_renyi(a: f64, next: &ChainModel, prev: &ChainModel) -> Result<f64> {
    let order = RenyiOrder::new(a)?;
    if next.n0() != prev.n0() {
        return Err(domain("chain models must share n0"));
    }
    let reference = match next {
        ChainModel::Linear(m) => m,
        ChainModel::ConstantEnergy { .. } if next == prev => return Ok(0.0),
        ChainModel::ConstantEnergy { .. } => {
            return Err(domain(
                "Rényi divergence into a constant-energy model is not available",
            ))
        }
    };
    let params = match *prev {
        ChainModel::ConstantEnergy {
            sigma2,
            ex,
            n0,
            q_const,
            t_horizon,
        } => RenyiGaussianParams {
            sigma2,
            sigma2_q: reference.sigma2,
            es: reference.es,
            ex,
            n0,
            q_const,
            t_horizon,
        },
        ChainModel::Linear(p) => {
            let gap = reference.es.sqrt() - p.es.sqrt();
            RenyiGaussianParams {
                sigma2: p.sigma2,
                sigma2_q: reference.sigma2,
                es: gap * gap,
                ex: 0.0,
                n0: p.n0,
                q_const: 0.0,
                t_horizon: 1.0,
            }
        }
    };
    renyi_gaussian_linear(order, &params)
}

/// One-step LPCB at split `beta`:
/// `(alpha / (alpha - beta)) Lambda_Q(alpha - beta) - (alpha / beta) D_{alpha/beta}(Q || P)`
/// with `Lambda_Q` the exact linear-Gaussian optimum of the reference.
pub fn lpcb_bound(
    alpha: f64,
    beta: f64,
    reference: &LinearGaussianModel,
    truth: &TruthModel,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    if !(beta > 0.0 && beta < alpha) {
        return Err(domain(format!(
            "beta must lie in (0, alpha = {alpha}), got {beta}"
        )));
    }
    let renyi = chain_renyi(alpha / beta, &ChainModel::Linear(*reference), truth)?;
    let b = if renyi == f64::INFINITY {
        BoundValue::useless()
    } else {
        let rest = alpha - beta;
        BoundValue::from_value(alpha / rest * reference.min_lambda(rest) - renyi)
    };
    Ok(b.with_arg("beta", beta))
}

/// Maximizes [`lpcb_bound`] over `beta` in `(1e-6 alpha, (1 - 1e-6) alpha)` by
/// a log-spaced scan and golden-section polish. Divergence is reported with
/// the witnessing split `beta = alpha - alpha_c(Q)`.
pub fn lpcb_optimize_beta(
    alpha: f64,
    reference: &LinearGaussianModel,
    truth: &TruthModel,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    let lo = BETA_BRACKET_MARGIN * alpha;
    let hi = (1.0 - BETA_BRACKET_MARGIN) * alpha;
    let witness = alpha - reference.alpha_c();
    if witness >= lo {
        let b = lpcb_bound(alpha, witness.min(hi), reference, truth)?;
        if b.is_divergent() {
            return Ok(b.with_note("divergence witnessed"));
        }
    }
    let f = |beta: f64| {
        lpcb_bound(alpha, beta, reference, truth)
            .map(|b| b.value)
            .unwrap_or(f64::NAN)
    };
    let m = maximize_log_scan(f, lo, hi, 241, 1e-10);
    Ok(lpcb_bound(alpha, m.x, reference, truth)?.with_evaluations(m.evaluations))
}

/// [`lpcb_optimize_beta`] over a grid of `alpha`, evaluated in parallel and
/// returned in input order.
pub fn lpcb_sweep(
    alphas: &[f64],
    reference: &LinearGaussianModel,
    truth: &TruthModel,
) -> Vec<Result<BoundValue>> {
    alphas
        .par_iter()
        .map(|&a| lpcb_optimize_beta(a, reference, truth))
        .collect()
}

/// Splits `beta_1..beta_k` and models `P_1 = P, ..., P_k = Q`.
///
/// The last split only shrinks the terminal risk factor; it may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcbChain {
    betas: Vec<f64>,
    models: Vec<ChainModel>,
}

impl LpcbChain {
    pub fn new(betas: Vec<f64>, models: Vec<ChainModel>) -> Result<Self> {
        if betas.is_empty() || betas.len() != models.len() {
            return Err(domain(format!(
                "chain needs k >= 1 splits and k models, got {} and {}",
                betas.len(),
                models.len()
            )));
        }
        let k = betas.len();
        for (i, &b) in betas.iter().enumerate() {
            if i + 1 < k {
                require_positive("beta_i", b)?;
            } else {
                require_nonnegative("beta_k", b)?;
            }
        }
        Ok(Self { betas, models })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn models(&self) -> &[ChainModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

/// The k-step bound
/// `(alpha / r_k) Lambda_{P_k}(r_k) - sum_{i<k} (alpha / r_{i-1}) a_i D_{a_i}(P_{i+1} || P_i)`
/// with `r_i = alpha - beta_1 - ... - beta_i` and `a_i = r_{i-1} / beta_i`.
/// The terminal model must be linear-Gaussian.
pub fn iterated_lpcb(chain: &LpcbChain, alpha: f64) -> Result<BoundValue> {
    iterated_lpcb_with(chain, alpha, chain_renyi, |m, a| match m {
        ChainModel::Linear(l) => Ok(l.min_lambda(a)),
        ChainModel::ConstantEnergy { .. } => {
            Err(domain("terminal chain model must be linear-Gaussian"))
        }
    })
}

/// [`iterated_lpcb`] with caller-supplied `a D_a(next || prev)` and terminal
/// exponential moment.
pub fn iterated_lpcb_with(
    chain: &LpcbChain,
    alpha: f64,
    renyi: impl Fn(f64, &ChainModel, &ChainModel) -> Result<f64>,
    terminal: impl Fn(&ChainModel, f64) -> Result<f64>,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    let total: f64 = chain.betas.iter().sum();
    if total >= alpha {
        return Err(domain(format!("splits sum to {total} >= alpha = {alpha}")));
    }
    let mut residual = alpha;
    let mut penalty = 0.0;
    let k = chain.len();
    for i in 0..k - 1 {
        let a = residual / chain.betas[i];
        let r = renyi(a, &chain.models[i + 1], &chain.models[i])?;
        if r == f64::INFINITY {
            return Ok(BoundValue::useless().with_arg("step", i as f64));
        }
        penalty += alpha / residual * r;
        residual -= chain.betas[i];
    }
    residual = alpha - total;
    let lead = alpha / residual * terminal(&chain.models[k - 1], residual)?;
    Ok(BoundValue::from_value(lead - penalty).with_arg("residual_alpha", residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn fig1(snr: f64) -> (LinearGaussianModel, TruthModel) {
        (
            LinearGaussianModel::new(0.5, 0.0, 1.0).unwrap(),
            ChainModel::constant_energy(0.5, snr, 1.0).unwrap(),
        )
    }

    #[test]
    fn split_must_be_interior() {
        let (q, p) = fig1(0.01);
        assert!(lpcb_bound(0.5, 0.0, &q, &p).is_err());
        assert!(lpcb_bound(0.5, 0.5, &q, &p).is_err());
    }

    #[test]
    fn same_prior_form() {
        // sigma2_q = sigma2, E_s = 0: (alpha/(2(alpha-beta))) ln(1/(1 - 2 sigma2 (alpha-beta))) - alpha E_x/(beta N0)
        let (q, p) = fig1(0.1);
        let (alpha, beta) = (0.7, 0.2);
        let v = lpcb_bound(alpha, beta, &q, &p).unwrap().value;
        let expected = alpha / (2.0 * (alpha - beta))
            * (1.0 / (1.0 - 2.0 * 0.5 * (alpha - beta))).ln()
            - alpha * 0.1 / beta;
        assert!((v - expected).abs() < 1e-13);
    }

    #[test]
    fn divergence_witness_past_prior_limit() {
        let sigma2 = 0.5;
        let eps = 0.01;
        let q = LinearGaussianModel::new(sigma2, 0.0, 1.0).unwrap();
        let p = ChainModel::constant_energy(sigma2, 0.001, 1.0).unwrap();
        let alpha = (1.0 + eps) / (2.0 * sigma2);
        let b = lpcb_bound(alpha, eps / (2.0 * sigma2), &q, &p).unwrap();
        assert!(b.is_divergent());
        let opt = lpcb_optimize_beta(alpha, &q, &p).unwrap();
        assert!(opt.is_divergent());
        assert!((opt.arg("beta").unwrap() - eps).abs() < 1e-12);
    }

    #[test]
    fn split_limits() {
        let (q, p) = fig1(1e-3);
        let alpha = 0.6;
        // beta -> 0: the leading term tends to (1/2) ln(1/(1 - 2 sigma2 alpha))
        let beta = 1e-9;
        let lead = alpha / (alpha - beta) * q.min_lambda(alpha - beta);
        assert!((lead - 0.5 * (1.0 / (1.0 - alpha)).ln()).abs() < 1e-8);
        // beta -> 0: the path penalty alpha E_x / (beta N0) blows up
        assert!(lpcb_bound(alpha, 1e-12, &q, &p).unwrap().value < -1e8);
        // beta -> alpha: the Rényi term tends to the KL divergence and the
        // bound to the Jensen form alpha mmse(Q) - D(Q || P)
        let near = lpcb_bound(alpha, alpha * (1.0 - 1e-9), &q, &p)
            .unwrap()
            .value;
        assert!((near - (alpha * q.mmse() - 1e-3)).abs() < 1e-6);
    }

    #[test]
    fn optimum_beats_log_probes_and_reevaluates() {
        for snr in [0.001, 0.01, 0.1] {
            let (q, p) = fig1(snr);
            for alpha in [0.1, 0.5, 0.9, 0.999] {
                let best = lpcb_optimize_beta(alpha, &q, &p).unwrap();
                let again = lpcb_bound(alpha, best.arg("beta").unwrap(), &q, &p).unwrap();
                assert!((again.value - best.value).abs() < 1e-9);
                for k in 0..200 {
                    let beta = alpha * 1e-6 * (1e6f64).powf(k as f64 / 199.0) * (1.0 - 1e-6);
                    let v = lpcb_bound(alpha, beta, &q, &p).unwrap().value;
                    assert!(
                        best.value >= v - 1e-9,
                        "snr {snr} alpha {alpha} beta {beta}"
                    );
                }
            }
        }
    }

    #[test]
    fn curves_order_by_snr_and_grow_with_alpha() {
        let alphas: Vec<f64> = (1..=100).map(|k| 0.01 * k as f64 - 0.001).collect();
        let curves: Vec<Vec<f64>> = [0.001, 0.01, 0.1]
            .iter()
            .map(|&snr| {
                let (q, p) = fig1(snr);
                lpcb_sweep(&alphas, &q, &p)
                    .into_iter()
                    .map(|b| b.unwrap().value)
                    .collect()
            })
            .collect();
        for c in &curves {
            assert!(c.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
        for i in 0..alphas.len() {
            assert!(curves[0][i] >= curves[1][i] && curves[1][i] >= curves[2][i]);
        }
    }

    #[test]
    fn two_step_chain_with_vanishing_tail_is_one_step() {
        let (q, p) = fig1(0.01);
        for (alpha, beta) in [(0.4, 0.1), (0.9, 0.05), (0.99, 0.3)] {
            let chain = LpcbChain::new(vec![beta, 0.0], vec![p, ChainModel::Linear(q)]).unwrap();
            let it = iterated_lpcb(&chain, alpha).unwrap().value;
            let one = lpcb_bound(alpha, beta, &q, &p).unwrap().value;
            assert!((it - one).abs() < 1e-6);
        }
    }

    #[test]
    fn single_step_chain_limits() {
        let m = LinearGaussianModel::new(0.8, 0.6, 1.0).unwrap();
        let alpha = 0.6 * m.alpha_c();
        let at = |b: f64| {
            iterated_lpcb(
                &LpcbChain::new(vec![b], vec![ChainModel::Linear(m)]).unwrap(),
                alpha,
            )
            .unwrap()
            .value
        };
        // vanishing split recovers the exact exponential moment
        assert!((at(1e-10) - m.min_lambda(alpha)).abs() < 1e-8);
        // full split recovers the Jensen bound alpha * MMSE
        assert!((at(alpha * (1.0 - 1e-9)) - alpha * m.mmse()).abs() < 1e-7);
    }

    #[test]
    fn three_step_ladder_search() {
        let sigma2 = 0.5;
        let p = ChainModel::constant_energy(sigma2, 0.05, 1.0).unwrap();
        let q = LinearGaussianModel::new(1.2, 0.3, 1.0).unwrap();
        let alpha = 0.8;
        let direct = lpcb_optimize_beta(alpha, &q, &p).unwrap().value;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..4000 {
            let mid = LinearGaussianModel::new(
                10f64.powf(rng.random_range(-1.0..1.0)),
                rng.random_range(0.0..0.5),
                1.0,
            )
            .unwrap();
            let b1 = alpha * rng.random_range(0.001..0.9);
            let b2 = (alpha - b1) * rng.random_range(0.001..0.99);
            let chain = LpcbChain::new(
                vec![b1, b2, 0.0],
                vec![p, ChainModel::Linear(mid), ChainModel::Linear(q)],
            )
            .unwrap();
            best = best.max(iterated_lpcb(&chain, alpha).unwrap().value);
        }
        // the ladder contains the direct chain (mid = q, b2 -> 0), so it can only help
        let degenerate = LpcbChain::new(
            vec![
                lpcb_optimize_beta(alpha, &q, &p)
                    .unwrap()
                    .arg("beta")
                    .unwrap(),
                1e-12,
                0.0,
            ],
            vec![p, ChainModel::Linear(q), ChainModel::Linear(q)],
        )
        .unwrap();
        let degenerate = iterated_lpcb(&degenerate, alpha).unwrap().value;
        assert!((degenerate - direct).abs() < 1e-9);
        assert!(best.max(degenerate) >= direct - 1e-9);
        if best > direct + 1e-9 {
            println!("three-step ladder improves on the direct chain: {best} > {direct}");
        } else {
            println!("no strict improvement found; ladder equals the direct chain at {direct}");
        }
    }

    proptest! {
        #[test]
        fn lpcb_never_exceeds_exact_for_linear_truth(
            sigma2 in 0.1f64..3.0, es in 0.0f64..3.0, sq in 0.05f64..5.0, esq in 0.0f64..4.0,
            frac in 0.01f64..0.99, split in 0.001f64..0.999,
        ) {
            let truth = LinearGaussianModel::new(sigma2, es, 1.0).unwrap();
            let reference = LinearGaussianModel::new(sq, esq, 1.0).unwrap();
            let alpha = frac * truth.alpha_c();
            let b = lpcb_bound(alpha, split * alpha, &reference, &ChainModel::Linear(truth)).unwrap();
            prop_assert!(b.value <= truth.min_lambda(alpha) + 1e-9);
        }

        #[test]
        fn chain_never_exceeds_exact_for_linear_truth(
            sigma2 in 0.1f64..3.0, es in 0.0f64..3.0, s_mid in 0.05f64..5.0, s_q in 0.05f64..5.0,
            e_mid in 0.0f64..3.0, e_q in 0.0f64..3.0, frac in 0.01f64..0.99,
            f1 in 0.01f64..0.98, f2 in 0.01f64..0.98,
        ) {
            let truth = LinearGaussianModel::new(sigma2, es, 1.0).unwrap();
            let alpha = frac * truth.alpha_c();
            let b1 = f1 * alpha;
            let b2 = f2 * (alpha - b1);
            let chain = LpcbChain::new(
                vec![b1, b2, 0.0],
                vec![
                    ChainModel::Linear(truth),
                    ChainModel::Linear(LinearGaussianModel::new(s_mid, e_mid, 1.0).unwrap()),
                    ChainModel::Linear(LinearGaussianModel::new(s_q, e_q, 1.0).unwrap()),
                ],
            ).unwrap();
            prop_assert!(iterated_lpcb(&chain, alpha).unwrap().value <= truth.min_lambda(alpha) + 1e-9);
        }
    }
}
