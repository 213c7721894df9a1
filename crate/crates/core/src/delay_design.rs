//! Reference-signal design for delay estimation.
//!
//! The reference `s` trades the energy of its derivative against its
//! distance to the true pulse `x`. For a multiplier `lambda` the optimum
//! solves `s - s''/lambda = x` with `s'(0) = s'(T) = 0`.

use std::f64::consts::PI;

use crate::bayes::tilted_prior_bound;
use crate::bound::BoundValue;
use crate::divergences::Prior;
use crate::error::{domain, require_positive, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::optimize::{coordinate_ascent, maximize_log_scan};

/// Fewest grid points accepted by the boundary-value solver.
pub const MIN_POINTS: usize = 64;

/// Largest tolerated `1 + 4 / (lambda h^2)`.
const MAX_CONDITION: f64 = 1e12;

/// Default residual tolerance.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// A raised-cosine pulse `sqrt(2 E_x / 3T) [1 - cos(omega0 t)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaisedCosine {
    pub ex: f64,
    pub omega0: f64,
    pub t_horizon: f64,
}

impl RaisedCosine {
    pub fn new(ex: f64, omega0: f64, t_horizon: f64) -> Result<Self> {
        require_positive("ex", ex)?;
        require_positive("omega0", omega0)?;
        require_positive("t_horizon", t_horizon)?;
        Ok(Self {
            ex,
            omega0,
            t_horizon,
        })
    }

    /// Whether `omega0 T` is a multiple of `pi`, the condition for the
    /// closed-form solution to meet the Neumann ends.
    pub fn is_boundary_compatible(&self) -> bool {
        let k = self.omega0 * self.t_horizon / PI;
        (k - k.round()).abs() <= 1e-9 * k.max(1.0) && k.round() >= 1.0
    }

    pub fn amplitude(&self) -> f64 {
        (2.0 * self.ex / (3.0 * self.t_horizon)).sqrt()
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        let (a, w) = (self.amplitude(), self.omega0);
        grid.sample(|t| a * (1.0 - (w * t).cos()))
    }

    /// `lambda / (lambda + omega0^2)`.
    pub fn nu(&self, lambda: f64) -> f64 {
        lambda / (lambda + self.omega0 * self.omega0)
    }

    /// `sqrt(2 E_x / 3T) [1 - nu cos(omega0 t)]`.
    pub fn solution(&self, grid: &Grid, lambda: f64) -> GridFunction {
        let (a, w, nu) = (self.amplitude(), self.omega0, self.nu(lambda));
        grid.sample(|t| a * (1.0 - nu * (w * t).cos()))
    }
}

/// `inf_s { ∫ s'^2 + lambda ∫ (x - s)^2 }` for a sampled pulse `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDesignProblem {
    x: GridFunction,
    lambda_mult: f64,
    n0: f64,
    pulse: Option<RaisedCosine>,
}

impl DelayDesignProblem {
    pub fn new(x: GridFunction, lambda_mult: f64, n0: f64) -> Result<Self> {
        require_positive("lambda", lambda_mult)?;
        require_positive("n0", n0)?;
        if x.grid().len() < MIN_POINTS {
            return Err(Error::Resolution(format!(
                "need at least {MIN_POINTS} grid points, got {}",
                x.grid().len()
            )));
        }
        if x.values().iter().any(|v| !v.is_finite()) {
            return Err(domain("pulse samples must be finite"));
        }
        Ok(Self {
            x,
            lambda_mult,
            n0,
            pulse: None,
        })
    }

    /// A raised-cosine pulse on `[0, T]`. The closed-form solution is used
    /// only when `omega0 T` is a multiple of `pi`.
    pub fn raised_cosine(
        pulse: RaisedCosine,
        lambda_mult: f64,
        n0: f64,
        points: usize,
    ) -> Result<Self> {
        let grid = Grid::new(0.0, pulse.t_horizon, points)?;
        let mut p = Self::new(pulse.sample(&grid), lambda_mult, n0)?;
        p.pulse = Some(pulse);
        Ok(p)
    }

    pub fn x(&self) -> &GridFunction {
        &self.x
    }

    pub fn lambda_mult(&self) -> f64 {
        self.lambda_mult
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// Closed-form solution when the pulse is a boundary-compatible raised cosine.
    pub fn analytic_solution(&self) -> Option<GridFunction> {
        self.pulse
            .filter(RaisedCosine::is_boundary_compatible)
            .map(|p| p.solution(self.x.grid(), self.lambda_mult))
    }

    /// Analytic path when available, otherwise the finite-difference solve.
    pub fn solve(&self) -> Result<GridFunction> {
        match self.analytic_solution() {
            Some(s) => Ok(s),
            None => solve_reference_ode(self).map(|r| r.signal),
        }
    }
}

/// A finite-difference solution with its discrete residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub signal: GridFunction,
    /// Max relative interior residual of `s - s''/lambda - x`.
    pub residual: f64,
    /// Max relative residual of the two ghost-point rows carrying `s'(0) = s'(T) = 0`.
    pub boundary_residual: f64,
}

/// Solves `s - s''/lambda = x`, `s'(0) = s'(T) = 0` with central differences
/// and ghost-point Neumann ends. The tridiagonal system is solved directly.
///
/// The discrete solution is the exact minimizer of
/// `sum (s_{i+1} - s_i)^2 / h + lambda * trapz((x - s)^2)`.
pub fn solve_reference_ode(problem: &DelayDesignProblem) -> Result<OdeSolution> {
    let x = problem.x.values();
    let n = x.len();
    let h = problem.x.grid().step();
    let k = 1.0 / (problem.lambda_mult * h * h);
    let condition = 1.0 + 4.0 * k;
    if !(condition.is_finite() && condition <= MAX_CONDITION) {
        return Err(Error::Conditioning(format!(
            "1 + 4/(lambda h^2) = {condition:e} exceeds {MAX_CONDITION:e}; refine the grid or raise lambda"
        )));
    }
    // row i: sub[i] s_{i-1} + diag[i] s_i + sup[i] s_{i+1} = x_i
    let diag = vec![1.0 + 2.0 * k; n];
    let mut sub = vec![-k; n];
    let mut sup = vec![-k; n];
    sub[0] = 0.0;
    sup[0] = -2.0 * k;
    sub[n - 1] = -2.0 * k;
    sup[n - 1] = 0.0;
    let s = thomas(&sub, &diag, &sup, x);
    // componentwise backward error, so round-off at large 1/(lambda h^2) is not flagged
    let row = |i: usize| {
        let left = if i > 0 { sub[i] * s[i - 1] } else { 0.0 };
        let right = if i + 1 < n { sup[i] * s[i + 1] } else { 0.0 };
        let scale = left.abs() + (diag[i] * s[i]).abs() + right.abs() + x[i].abs();
        let r = (left + diag[i] * s[i] + right - x[i]).abs();
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    };
    let residual = (1..n - 1).map(row).fold(0.0, f64::max);
    let boundary_residual = row(0).max(row(n - 1));
    Ok(OdeSolution {
        signal: GridFunction::new(*problem.x.grid(), s)?,
        residual,
        boundary_residual,
    })
}

/// Thomas algorithm; the system here is diagonally dominant so no pivoting.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut s = vec![0.0; n];
    s[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        s[i] = d[i] - c[i] * s[i + 1];
    }
    s
}

/// Discrete Lagrangian `sum (s_{i+1} - s_i)^2 / h + lambda trapz((x - s)^2)`.
pub fn lagrangian(s: &GridFunction, x: &GridFunction, lambda_mult: f64) -> Result<f64> {
    s.check_same_grid(x)?;
    let h = s.grid().step();
    let v = s.values();
    let slope: f64 = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
    let diff = GridFunction::new(
        *s.grid(),
        v.iter().zip(x.values()).map(|(a, b)| a - b).collect(),
    )?;
    Ok(slope + lambda_mult * diff.energy())
}

/// The one-parameter family of raised-cosine references, `nu = lambda / (lambda + omega0^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuTradeoff {
    pub nu: f64,
    pub omega0: f64,
    pub ex: f64,
}

impl NuTradeoff {
    pub fn new(nu: f64, omega0: f64, ex: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(domain(format!("nu must lie in [0, 1], got {nu}")));
        }
        require_positive("omega0", omega0)?;
        require_positive("ex", ex)?;
        Ok(Self { nu, omega0, ex })
    }

    /// `∫ s'^2 = E_x omega0^2 nu^2 / 3`.
    pub fn derivative_energy(&self) -> f64 {
        self.ex * self.omega0 * self.omega0 * self.nu * self.nu / 3.0
    }

    /// `(1/N0) ∫ (s - x)^2 = E_x (1 - nu)^2 / (3 N0)`.
    pub fn distance_term(&self, n0: f64) -> f64 {
        self.ex * (1.0 - self.nu).powi(2) / (3.0 * n0)
    }
}

/// `alpha / (I(Q_beta) + 2 nu^2 omega0^2 E_x / 3N0) - D(Q_beta || P) - E_x (1 - nu)^2 / 3N0`.
pub fn nu_bound(
    prior: &Prior,
    alpha: f64,
    beta: f64,
    tradeoff: &NuTradeoff,
    n0: f64,
) -> Result<BoundValue> {
    require_positive("n0", n0)?;
    let b = tilted_prior_bound(
        prior,
        alpha,
        beta,
        tradeoff.derivative_energy() / n0,
        tradeoff.distance_term(n0),
    )?;
    Ok(b.with_arg("nu", tradeoff.nu))
}

/// Tilt search range for the optimizers below.
const BETA_RANGE: (f64, f64) = (1e-3, 1e3);

/// The `nu = 0` specialization maximized over `beta`:
/// `sup_beta [alpha / I(Q_beta) - D(Q_beta || P)] - E_x / 3N0`.
pub fn nu_zero_bound(
    prior: &Prior,
    alpha: f64,
    omega0: f64,
    ex: f64,
    n0: f64,
) -> Result<BoundValue> {
    let t = NuTradeoff::new(0.0, omega0, ex)?;
    let f = |beta: f64| {
        nu_bound(prior, alpha, beta, &t, n0)
            .map(|b| b.value)
            .unwrap_or(f64::NAN)
    };
    let m = maximize_log_scan(f, BETA_RANGE.0, BETA_RANGE.1, 121, 1e-9);
    if m.value == f64::NEG_INFINITY {
        return Err(Error::Regularity(
            "no admissible tilt in the search range".into(),
        ));
    }
    Ok(nu_bound(prior, alpha, m.x, &t, n0)?.with_evaluations(m.evaluations))
}

/// Joint maximization of [`nu_bound`] over `nu` in `[0, 1]` and `beta` in
/// `[1e-3, 1e3]` by coordinate ascent from three starts.
pub fn optimize_nu_bound(
    prior: &Prior,
    alpha: f64,
    omega0: f64,
    ex: f64,
    n0: f64,
) -> Result<BoundValue> {
    NuTradeoff::new(0.0, omega0, ex)?;
    let f = |nu: f64, log_beta: f64| {
        NuTradeoff::new(nu.clamp(0.0, 1.0), omega0, ex)
            .and_then(|t| nu_bound(prior, alpha, log_beta.exp(), &t, n0))
            .map(|b| b.value)
            .unwrap_or(f64::NAN)
    };
    let (lo, hi) = (BETA_RANGE.0.ln(), BETA_RANGE.1.ln());
    let m = coordinate_ascent(
        f,
        [(0.0, 1.0), (lo, hi)],
        &[[0.0, 0.0], [1.0, 0.0], [0.5, lo / 2.0]],
        12,
    );
    if m.value == f64::NEG_INFINITY {
        return Err(Error::Regularity(
            "no admissible tilt in the search range".into(),
        ));
    }
    let t = NuTradeoff::new(m.x[0], omega0, ex)?;
    Ok(nu_bound(prior, alpha, m.x[1].exp(), &t, n0)?.with_evaluations(m.evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn pulse() -> RaisedCosine {
        RaisedCosine::new(1.5, 2.0 * PI, 1.0).unwrap()
    }

    #[test]
    fn constant_pulse_is_its_own_reference() {
        let g = Grid::new(0.0, 2.0, 257).unwrap();
        let p = DelayDesignProblem::new(g.sample(|_| 0.7), 3.0, 1.0).unwrap();
        let s = solve_reference_ode(&p).unwrap();
        assert!(s.signal.values().iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn matches_raised_cosine_and_converges_at_second_order() {
        let err = |n: usize, lambda: f64| {
            let p = DelayDesignProblem::raised_cosine(pulse(), lambda, 1.0, n).unwrap();
            let s = solve_reference_ode(&p).unwrap();
            assert!(s.residual < RESIDUAL_TOL && s.boundary_residual < RESIDUAL_TOL);
            let exact = p.analytic_solution().unwrap();
            s.signal
                .values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        for lambda in [0.1, 5.0, 400.0] {
            assert!(err(4096, lambda) <= 1e-6);
            let ratio = err(257, lambda) / err(513, lambda);
            assert!(
                (3.5..=4.5).contains(&ratio),
                "lambda {lambda}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn analytic_path_requires_compatible_frequency() {
        let bad = RaisedCosine::new(1.0, 5.0, 1.0).unwrap();
        assert!(!bad.is_boundary_compatible());
        let p = DelayDesignProblem::raised_cosine(bad, 2.0, 1.0, 512).unwrap();
        assert!(p.analytic_solution().is_none());
        assert_eq!(p.solve().unwrap(), solve_reference_ode(&p).unwrap().signal);
        assert!(RaisedCosine::new(1.0, PI, 1.0)
            .unwrap()
            .is_boundary_compatible());
    }

    #[test]
    fn rejects_coarse_or_singular_discretizations() {
        let g = Grid::new(0.0, 1.0, 32).unwrap();
        assert!(matches!(
            DelayDesignProblem::new(g.sample(|_| 1.0), 1.0, 1.0),
            Err(Error::Resolution(_))
        ));
        let g = Grid::new(0.0, 1.0, 4096).unwrap();
        let p = DelayDesignProblem::new(g.sample(|t| t), 1e-7, 1.0).unwrap();
        assert!(matches!(
            solve_reference_ode(&p),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn solution_minimizes_the_lagrangian() {
        let g = Grid::new(0.0, 1.0, 513).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let coefs: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = g.sample(|t| {
            coefs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 * 2.3 * t).cos())
                .sum()
        });
        let lambda = 7.0;
        let p = DelayDesignProblem::new(x.clone(), lambda, 1.0).unwrap();
        let s = solve_reference_ode(&p).unwrap().signal;
        let best = lagrangian(&s, &x, lambda).unwrap();
        for _ in 0..50 {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = g.sample(|t| {
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * ((k + 1) as f64 * 3.1 * t).sin())
                    .sum()
            });
            let moved = GridFunction::new(
                g,
                s.values()
                    .iter()
                    .zip(r.values())
                    .map(|(a, b)| a + 1e-3 * b)
                    .collect(),
            )
            .unwrap();
            assert!(lagrangian(&moved, &x, lambda).unwrap() >= best);
        }
    }

    #[test]
    fn energy_identities() {
        let rc = pulse();
        let n0 = 0.4;
        let g = Grid::new(0.0, 1.0, 4096).unwrap();
        let x = rc.sample(&g);
        assert!((x.energy() - rc.ex).abs() < 1e-6 * rc.ex);
        for lambda in [0.5, 10.0, 300.0] {
            let s = rc.solution(&g, lambda);
            let t = NuTradeoff::new(rc.nu(lambda), rc.omega0, rc.ex).unwrap();
            let deriv = g
                .sample(|u| rc.amplitude() * t.nu * rc.omega0 * (rc.omega0 * u).sin())
                .energy();
            assert!(((deriv - t.derivative_energy()) / t.derivative_energy()).abs() < 1e-6);
            let dist = crate::divergences::path_divergence(&s, &x, n0).unwrap();
            assert!(((dist - t.distance_term(n0)) / t.distance_term(n0)).abs() < 1e-6);
        }
    }

    #[test]
    fn nu_endpoints() {
        let prior = Prior::gaussian(0.05).unwrap();
        let (alpha, beta, n0) = (3.0, 0.8, 0.5);
        let one = NuTradeoff::new(1.0, 2.0 * PI, 1.0).unwrap();
        assert_eq!(one.distance_term(n0), 0.0);
        let zero = NuTradeoff::new(0.0, 2.0 * PI, 1.0).unwrap();
        let b = nu_bound(&prior, alpha, beta, &zero, n0).unwrap();
        let t = prior.tilt(beta).unwrap();
        let expected = alpha / t.fisher_info - t.divergence() - 1.0 / (3.0 * n0);
        assert!((b.value - expected).abs() < 1e-12);
        assert!(NuTradeoff::new(1.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn nu_bound_is_smooth_in_nu() {
        let prior = Prior::gaussian(0.05).unwrap();
        let vals: Vec<f64> = (0..=1000)
            .map(|k| {
                let t = NuTradeoff::new(k as f64 / 1000.0, 2.0 * PI, 1.0).unwrap();
                nu_bound(&prior, 3.0, 0.8, &t, 2.0).unwrap().value
            })
            .collect();
        let max_jump = vals
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
            .fold(0.0, f64::max);
        assert!(max_jump < 1e-6, "{max_jump}");
    }

    #[test]
    fn joint_optimum_dominates_endpoints() {
        let prior = Prior::gaussian(0.05).unwrap();
        let (alpha, w, ex, n0) = (4.0, 2.0 * PI, 1.0, 2.0);
        let joint = optimize_nu_bound(&prior, alpha, w, ex, n0).unwrap();
        let zero = nu_zero_bound(&prior, alpha, w, ex, n0).unwrap();
        assert!(joint.value >= zero.value - 1e-9);
        let one = NuTradeoff::new(1.0, w, ex).unwrap();
        for beta in [0.01, 0.1, 1.0, 10.0] {
            assert!(joint.value >= nu_bound(&prior, alpha, beta, &one, n0).unwrap().value - 1e-9);
        }
        let again = nu_bound(
            &prior,
            alpha,
            joint.arg("beta").unwrap(),
            &NuTradeoff::new(joint.arg("nu").unwrap(), w, ex).unwrap(),
            n0,
        )
        .unwrap();
        assert!((again.value - joint.value).abs() < 1e-12);
    }
}
