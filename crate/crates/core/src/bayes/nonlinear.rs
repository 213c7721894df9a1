use std::f64::consts::PI;

use crate::bound::BoundValue;
use crate::error::{domain, require_nonnegative, require_positive, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::optimize::{maximize_log_scan, maximize_scan};

/// Relative tolerance on the per-parameter signal energy.
const ENERGY_TOL: f64 = 0.01;

/// How `∫ [E_Q{Theta x(t, Theta)}]^2 dt` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalFamily {
    /// `x = sqrt(2 E_x / T) cos(omega t + theta)`, closed form.
    Phase { omega: f64 },
    /// Quadrature over the sampled `(t, theta)` table.
    Sampled,
}

/// `Theta ~ N(0, sigma2)` observed through `y(t) = x(t, Theta) + n(t)` where
/// every `x(., theta)` has energy `ex`. The signal family is tabulated on a
/// `(t, theta)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearBayesModel {
    t_grid: Grid,
    theta_grid: Grid,
    rows: Vec<Vec<f64>>,
    ex: f64,
    n0: f64,
    sigma2: f64,
    family: SignalFamily,
}

impl NonlinearBayesModel {
    /// Tabulates `x(t, theta)` and checks that each row has energy `ex` to 1%.
    pub fn from_fn(
        t_grid: Grid,
        theta_grid: Grid,
        x: impl Fn(f64, f64) -> f64,
        ex: f64,
        n0: f64,
        sigma2: f64,
    ) -> Result<Self> {
        Self::build(t_grid, theta_grid, x, ex, n0, sigma2, SignalFamily::Sampled)
    }

    /// Phase modulation `sqrt(2 ex / T) cos(omega t + theta)`; `omega T` must
    /// be a multiple of `pi` for the energy to be independent of `theta`.
    pub fn phase(
        ex: f64,
        n0: f64,
        sigma2: f64,
        t_horizon: f64,
        omega: f64,
        t_points: usize,
    ) -> Result<Self> {
        require_positive("t_horizon", t_horizon)?;
        require_positive("omega", omega)?;
        let amp = (2.0 * ex / t_horizon).sqrt();
        let t_grid = Grid::new(0.0, t_horizon, t_points)?;
        let half = 8.0 * sigma2.sqrt().max(PI / 8.0);
        let theta_grid = Grid::new(-half, half, 801)?;
        Self::build(
            t_grid,
            theta_grid,
            move |t, th| amp * (omega * t + th).cos(),
            ex,
            n0,
            sigma2,
            SignalFamily::Phase { omega },
        )
    }

    fn build(
        t_grid: Grid,
        theta_grid: Grid,
        x: impl Fn(f64, f64) -> f64,
        ex: f64,
        n0: f64,
        sigma2: f64,
        family: SignalFamily,
    ) -> Result<Self> {
        require_positive("ex", ex)?;
        require_positive("n0", n0)?;
        require_positive("sigma2", sigma2)?;
        let mut rows = Vec::with_capacity(theta_grid.len());
        for th in theta_grid.points() {
            let row = t_grid.sample(|t| x(t, th));
            let e = row.energy();
            if ((e - ex) / ex).abs() > ENERGY_TOL {
                return Err(domain(format!(
                    "signal energy {e} at theta = {th} differs from ex = {ex} by more than 1%"
                )));
            }
            rows.push(row.into_values());
        }
        Ok(Self {
            t_grid,
            theta_grid,
            rows,
            ex,
            n0,
            sigma2,
            family,
        })
    }

    pub fn ex(&self) -> f64 {
        self.ex
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn t_grid(&self) -> &Grid {
        &self.t_grid
    }

    pub fn theta_grid(&self) -> &Grid {
        &self.theta_grid
    }

    pub fn family(&self) -> SignalFamily {
        self.family
    }

    /// `N(0, sigma2_q)` restricted to the theta grid and renormalized.
    pub fn gaussian_weights(&self, sigma2_q: f64) -> Result<GridFunction> {
        require_positive("sigma2_q", sigma2_q)?;
        self.theta_grid
            .sample(|th| (-th * th / (2.0 * sigma2_q)).exp())
            .normalized()
    }

    /// `E_Q{Theta x(t, Theta)}` for a prior density sampled on the theta grid.
    pub fn correlation_waveform(&self, q_prior: &GridFunction) -> Result<GridFunction> {
        if !q_prior.grid().same_as(&self.theta_grid) {
            return Err(Error::Shape(
                "Q prior must be sampled on the model's theta grid".into(),
            ));
        }
        let mut g = vec![0.0; self.t_grid.len()];
        for (j, th) in self.theta_grid.points().enumerate() {
            let w = self.theta_grid.trapezoid_weight(j) * q_prior.values()[j] * th;
            if w != 0.0 {
                for (gi, xi) in g.iter_mut().zip(&self.rows[j]) {
                    *gi += w * xi;
                }
            }
        }
        GridFunction::new(self.t_grid, g)
    }

    /// `∫ [E_Q{Theta x(t, Theta)}]^2 dt` for `Q = N(0, sigma2_q)`.
    pub fn correlation_energy(&self, sigma2_q: f64) -> Result<f64> {
        match self.family {
            SignalFamily::Phase { .. } => {
                require_positive("sigma2_q", sigma2_q)?;
                Ok(phase_correlation_energy(self.ex, sigma2_q))
            }
            SignalFamily::Sampled => Ok(self
                .correlation_waveform(&self.gaussian_weights(sigma2_q)?)?
                .energy()),
        }
    }

    /// Largest reference variance whose prior fits in the theta grid (6 sd).
    pub fn max_reference_variance(&self) -> f64 {
        match self.family {
            SignalFamily::Phase { .. } => f64::INFINITY,
            SignalFamily::Sampled => {
                let half = self
                    .theta_grid
                    .start()
                    .abs()
                    .min(self.theta_grid.end().abs());
                (half / 6.0).powi(2)
            }
        }
    }
}

/// `E_x sigma2_q^2 exp(-sigma2_q)` for the phase-modulation family.
pub fn phase_correlation_energy(ex: f64, sigma2_q: f64) -> f64 {
    ex * sigma2_q * sigma2_q * (-sigma2_q).exp()
}

/// The energy-`es` signal best aligned with `E_Q{Theta x(t, Theta)}`.
pub fn optimal_reference_signal(
    model: &NonlinearBayesModel,
    q_prior: &GridFunction,
    es: f64,
) -> Result<GridFunction> {
    require_nonnegative("es", es)?;
    let g = model.correlation_waveform(q_prior)?;
    let norm2 = g.energy();
    let scale = model.ex * q_prior.mean_and_variance().1.powi(2);
    if !(norm2 > 1e-24 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate(
            "E_Q{Theta x(t, Theta)} vanishes identically".into(),
        ));
    }
    Ok(g.scaled((es / norm2).sqrt()))
}

/// How the reference signal-to-noise ratio `lambda = E_s / N0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Fixed(f64),
    /// `lambda = C / (N0 sigma2_q^2)`, the maximizer of `-c lambda + d sqrt(lambda)`.
    Closed,
    /// Numerical maximization; the optimum lies in `[0, C / (N0 sigma2_q^2)]`.
    Optimize,
}

fn linear_ref_objective(
    alpha: f64,
    sigma2: f64,
    sigma2_q: f64,
    c_energy: f64,
    ex: f64,
    n0: f64,
    lambda: f64,
) -> f64 {
    let r = sigma2_q / sigma2;
    let prior = 0.5 * (r - r.ln() - 1.0);
    alpha * sigma2_q / (1.0 + 2.0 * lambda * sigma2_q)
        - lambda * sigma2_q
        - prior
        - (ex - 2.0 * (lambda * n0 * c_energy).sqrt()) / n0
}

/// Change-of-measure bound with a linear-Gaussian reference
/// `y = Theta s*(t) + n(t)`, `Theta ~ N(0, sigma2_q)`, `s*` optimal for energy
/// `lambda N0`:
/// `alpha sq/(1 + 2 lambda sq) - lambda sq - KL(sq || sigma2) - (E_x - 2 sqrt(lambda N0 C)) / N0`.
pub fn nonlinear_linear_ref_bound(
    model: &NonlinearBayesModel,
    alpha: f64,
    sigma2_q: f64,
    mode: LambdaMode,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    let c_energy = model.correlation_energy(sigma2_q)?;
    evaluate(model, alpha, sigma2_q, c_energy, mode)
}

fn evaluate(
    model: &NonlinearBayesModel,
    alpha: f64,
    sigma2_q: f64,
    c_energy: f64,
    mode: LambdaMode,
) -> Result<BoundValue> {
    let f = |lambda: f64| {
        linear_ref_objective(
            alpha,
            model.sigma2,
            sigma2_q,
            c_energy,
            model.ex,
            model.n0,
            lambda,
        )
    };
    let closed = c_energy / (model.n0 * sigma2_q * sigma2_q);
    let (lambda, value, evals) = match mode {
        LambdaMode::Fixed(l) => {
            require_nonnegative("lambda", l)?;
            (l, f(l), 1)
        }
        LambdaMode::Closed => (closed, f(closed), 1),
        LambdaMode::Optimize => {
            let umax = closed.sqrt();
            if umax == 0.0 {
                (0.0, f(0.0), 1)
            } else {
                let m = maximize_scan(|u| f(u * u), 0.0, umax, 201, 1e-12 * umax);
                (m.x * m.x, m.value, m.evaluations)
            }
        }
    };
    Ok(BoundValue::from_value(value)
        .with_arg("sigma2_q", sigma2_q)
        .with_arg("lambda", lambda)
        .with_evaluations(evals))
}

/// Maximizes [`nonlinear_linear_ref_bound`] over `sigma2_q` (log scan over
/// six decades around `sigma2`) with `lambda` chosen per `inner`.
pub fn optimize_nonlinear_bound(
    model: &NonlinearBayesModel,
    alpha: f64,
    inner: LambdaMode,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    let lo = model.sigma2 * 1e-3;
    let hi = (model.sigma2 * 1e3).min(model.max_reference_variance());
    if hi <= lo {
        return Err(domain(
            "theta grid too narrow for the reference prior search",
        ));
    }
    let eval = |sq: f64| -> f64 {
        model
            .correlation_energy(sq)
            .and_then(|c| evaluate(model, alpha, sq, c, inner))
            .map(|b| b.value)
            .unwrap_or(f64::NAN)
    };
    let m = maximize_log_scan(eval, lo, hi, 161, 1e-10);
    let best = nonlinear_linear_ref_bound(model, alpha, m.x, inner)?;
    Ok(best.with_evaluations(m.evaluations))
}

/// Phase-model bound with the `exp(-sigma2_q)` terms dropped and
/// `sigma2_q = sigma2 / (1 - 2 alpha sigma2)`:
/// `(1/2) ln(1 / (1 - 2 alpha sigma2)) - E_x / N0`, `+inf` once
/// `alpha >= 1 / (2 sigma2)`. Valid as an approximation for large `sigma2`.
pub fn phase_bound_large_sigma(alpha: f64, sigma2: f64, ex_over_n0: f64) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    require_positive("sigma2", sigma2)?;
    require_nonnegative("ex_over_n0", ex_over_n0)?;
    let x = 2.0 * alpha * sigma2;
    let ac = 1.0 / (2.0 * sigma2);
    if x >= 1.0 {
        return Ok(BoundValue::divergent().with_arg("alpha_c_upper", ac));
    }
    Ok(BoundValue::from_value(-0.5 * (-x).ln_1p() - ex_over_n0)
        .with_arg("sigma2_q", sigma2 / (1.0 - x))
        .with_arg("alpha_c_upper", ac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::{gaussian_kl, GaussianPriorPair};
    use rand::{Rng, SeedableRng};

    /// A tabulated family without the constant-energy check.
    fn unchecked(t: Grid, th: Grid, x: impl Fn(f64, f64) -> f64) -> NonlinearBayesModel {
        NonlinearBayesModel {
            t_grid: t,
            theta_grid: th,
            rows: th
                .points()
                .map(|a| t.points().map(|s| x(s, a)).collect())
                .collect(),
            ex: 1.0,
            n0: 1.0,
            sigma2: 1.0,
            family: SignalFamily::Sampled,
        }
    }

    fn phase_model(sigma2: f64) -> NonlinearBayesModel {
        NonlinearBayesModel::phase(1.0, 0.5, sigma2, 1.0, 2.0 * PI * 4.0, 2049).unwrap()
    }

    #[test]
    fn energy_validation() {
        // omega T not a multiple of pi: the energy varies with theta
        assert!(NonlinearBayesModel::phase(1.0, 0.5, 1.0, 1.0, 1.3, 2049).is_err());
        let t = Grid::new(0.0, 1.0, 513).unwrap();
        let th = Grid::new(-4.0, 4.0, 81).unwrap();
        assert!(NonlinearBayesModel::from_fn(t, th, |_, th| th, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn linear_family_reference_is_the_pulse() {
        let t = Grid::new(0.0, 1.0, 1025).unwrap();
        let th = Grid::new(-6.0, 6.0, 601).unwrap();
        let q = th.sample(|x| (-x * x / 2.0).exp()).normalized().unwrap();
        let g = |t: f64| (2.0f64).sqrt() * (PI * t).sin();
        let flat = unchecked(t, th, |s, _| g(s));
        assert!(matches!(
            optimal_reference_signal(&flat, &q, 1.0),
            Err(Error::Degenerate(_))
        ));
        let m = unchecked(t, th, |s, a| a * g(s));
        let s = optimal_reference_signal(&m, &q, 2.0).unwrap();
        assert!((s.energy() - 2.0).abs() < 1e-9);
        for (si, ti) in s.values().iter().zip(t.points()) {
            assert!((si - 2f64.sqrt() * g(ti)).abs() < 1e-6);
        }
    }

    #[test]
    fn phase_correlation_matches_quadrature() {
        let m = phase_model(1.0);
        for sq in [0.2, 0.7, 1.5] {
            let w = m.gaussian_weights(sq).unwrap();
            let numeric = m.correlation_waveform(&w).unwrap().energy();
            let closed = phase_correlation_energy(1.0, sq);
            assert!(
                ((numeric - closed) / closed).abs() < 1e-5,
                "{sq}: {numeric} vs {closed}"
            );
            let s = optimal_reference_signal(&m, &w, 1.0).unwrap();
            // s* is proportional to -sin(omega t)
            let omega = 2.0 * PI * 4.0;
            let shape = m.t_grid().sample(|t| -(2.0f64).sqrt() * (omega * t).sin());
            assert!((s.inner(&shape).unwrap() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn reference_beats_random_signals() {
        let t = Grid::new(0.0, 1.0, 513).unwrap();
        let th = Grid::new(-4.0, 4.0, 161).unwrap();
        let x = |t: f64, th: f64| (2.0f64).sqrt() * (2.0 * PI * t + 0.8 * th).cos();
        let m = NonlinearBayesModel::from_fn(t, th, x, 1.0, 1.0, 1.0).unwrap();
        let q = m.gaussian_weights(0.8).unwrap();
        let g = m.correlation_waveform(&q).unwrap();
        let s = optimal_reference_signal(&m, &q, 1.0).unwrap();
        let best = s.inner(&g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = t.sample(|u| {
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * ((k + 1) as f64 * u * 3.0).sin())
                    .sum()
            });
            let r = r.scaled(1.0 / r.energy().sqrt());
            assert!(r.inner(&g).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn lambda_zero_leaves_prior_and_path_terms() {
        let m = phase_model(1.0);
        let b = nonlinear_linear_ref_bound(&m, 0.3, 2.0, LambdaMode::Fixed(0.0)).unwrap();
        let kl = gaussian_kl(GaussianPriorPair::new(1.0, 2.0).unwrap());
        assert!((b.value - (0.3 * 2.0 - kl - 1.0 / 0.5)).abs() < 1e-14);
    }

    #[test]
    fn phase_equal_variance_closed_form() {
        let (sigma2, ex, n0, alpha) = (0.8, 1.0, 0.5, 0.4);
        let m = NonlinearBayesModel::phase(ex, n0, sigma2, 1.0, 2.0 * PI * 4.0, 1025).unwrap();
        let b = nonlinear_linear_ref_bound(&m, alpha, sigma2, LambdaMode::Closed).unwrap();
        let e = (-sigma2).exp();
        let expected =
            alpha * sigma2 / (1.0 + 2.0 * ex * sigma2 * e / n0) - ex / n0 * (1.0 - sigma2 * e);
        assert!(
            (b.value - expected).abs() < 1e-12,
            "{} vs {expected}",
            b.value
        );
    }

    #[test]
    fn optimized_lambda_dominates_closed_choice() {
        let m = phase_model(1.0);
        for sq in [0.3, 1.0, 2.5] {
            for alpha in [0.05, 0.4, 2.0] {
                let c = nonlinear_linear_ref_bound(&m, alpha, sq, LambdaMode::Closed).unwrap();
                let o = nonlinear_linear_ref_bound(&m, alpha, sq, LambdaMode::Optimize).unwrap();
                assert!(o.value >= c.value - 1e-12);
                assert!(o.arg("lambda").unwrap() <= c.arg("lambda").unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn optimizer_beats_random_probes_and_reevaluates() {
        let m = phase_model(1.5);
        let alpha = 0.25;
        let best = optimize_nonlinear_bound(&m, alpha, LambdaMode::Optimize).unwrap();
        let (sq, l) = (best.arg("sigma2_q").unwrap(), best.arg("lambda").unwrap());
        let again = nonlinear_linear_ref_bound(&m, alpha, sq, LambdaMode::Fixed(l)).unwrap();
        assert!((again.value - best.value).abs() < 1e-9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let sq = 10f64.powf(rng.random_range(-2.0..2.0));
            let l = 10f64.powf(rng.random_range(-4.0..1.0));
            let v = nonlinear_linear_ref_bound(&m, alpha, sq, LambdaMode::Fixed(l))
                .unwrap()
                .value;
            assert!(best.value >= v - 1e-9);
        }
    }

    #[test]
    fn large_sigma_form() {
        let b = phase_bound_large_sigma(0.25, 1.0, 0.1).unwrap();
        assert!((b.value - (0.5 * 2f64.ln() - 0.1)).abs() < 1e-15);
        assert!(phase_bound_large_sigma(0.5, 1.0, 0.1)
            .unwrap()
            .is_divergent());
        let sigma2 = 25.0;
        let m = NonlinearBayesModel::phase(1.0, 1.0, sigma2, 1.0, 2.0 * PI, 513).unwrap();
        for alpha in [0.001, 0.005, 0.015] {
            let approx = phase_bound_large_sigma(alpha, sigma2, 1.0).unwrap();
            let sq = approx.arg("sigma2_q").unwrap();
            let full = nonlinear_linear_ref_bound(&m, alpha, sq, LambdaMode::Closed).unwrap();
            assert!((full.value - approx.value).abs() < 1e-3);
        }
    }

    #[test]
    fn bounds_grow_with_alpha() {
        let m = phase_model(1.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..40 {
            let v = optimize_nonlinear_bound(&m, 0.05 * k as f64, LambdaMode::Optimize)
                .unwrap()
                .value;
            assert!(v >= prev - 1e-9);
            prev = v;
        }
    }
}
