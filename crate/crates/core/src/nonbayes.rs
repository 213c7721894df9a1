//! Lower bounds on `ln E_theta exp{alpha (est - theta)^2}` for unbiased
//! estimators of a non-random parameter, and the exact values attained by
//! maximum likelihood in the linear models.
//!
//! Every bound here assumes the estimator is unbiased. That cannot be checked
//! from a bound query, so it is only recorded in the bound's notes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bound::BoundValue;
use crate::error::{domain, require_positive, Error, Result};
use crate::grid::Grid;
use crate::optimize::maximize_scan;

const UNBIASED_NOTE: &str = "assumes an unbiased estimator";

/// Values above this many nats are reported as `+inf` by the probe search.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Largest accepted condition number of the correlation matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// `alpha L(theta~) + alpha (theta~ - theta)^2 - D(P_theta~ || P_theta)` for a
/// single test point `theta~`.
pub fn generic_nonbayes_bound(alpha: f64, mse_lb: f64, offset: f64, divergence: f64) -> f64 {
    alpha * mse_lb + alpha * offset * offset - divergence
}

/// `E_s / N0`, the exact critical risk factor of the scalar linear model.
pub fn scalar_alpha_c(es: f64, n0: f64) -> f64 {
    es / n0
}

/// Scalar linear model `x(t, theta) = theta s(t)`: `alpha N0 / (2 E_s)` up to
/// `alpha = E_s/N0`, `+inf` beyond.
pub fn scalar_linear_bound(alpha: f64, es: f64, n0: f64) -> Result<BoundValue> {
    require_positive("es", es)?;
    require_positive("n0", n0)?;
    if !(alpha >= 0.0) {
        return Err(domain(format!("alpha must be nonnegative, got {alpha}")));
    }
    let ac = scalar_alpha_c(es, n0);
    let b = if alpha <= ac {
        BoundValue::from_value(alpha * n0 / (2.0 * es)).with_arg("theta_offset", 0.0)
    } else {
        BoundValue::divergent()
    };
    Ok(b.with_arg("alpha_c", ac).with_note(UNBIASED_NOTE))
}

/// Exact value for the ML estimator, `-1/2 ln(1 - alpha N0 / E_s)`, `+inf` at
/// or beyond `alpha = E_s/N0`.
pub fn scalar_ml_lambda(alpha: f64, es: f64, n0: f64) -> Result<f64> {
    require_positive("es", es)?;
    require_positive("n0", n0)?;
    Ok(ml_from_quad(alpha * n0 / es))
}

fn ml_from_quad(r: f64) -> f64 {
    if r >= 1.0 {
        f64::INFINITY
    } else {
        -0.5 * (-r).ln_1p()
    }
}

/// `x(t, theta) = sum_i theta_i s_i(t)` with equal energies and correlation
/// matrix `gamma_ij = (1/E_s) ∫ s_i s_j`.
#[derive(Debug, Clone)]
pub struct VectorLinearModel {
    gamma: DMatrix<f64>,
    cholesky: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    condition: f64,
    es: f64,
    n0: f64,
}

impl VectorLinearModel {
    pub fn new(gamma: DMatrix<f64>, es: f64, n0: f64) -> Result<Self> {
        require_positive("es", es)?;
        require_positive("n0", n0)?;
        let k = gamma.nrows();
        if k == 0 || gamma.ncols() != k {
            return Err(Error::Shape(format!(
                "gamma must be square, got {}x{}",
                k,
                gamma.ncols()
            )));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::Matrix("gamma has non-finite entries".into()));
        }
        for i in 0..k {
            if (gamma[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(Error::Matrix(format!(
                    "gamma[{i},{i}] = {} is not 1",
                    gamma[(i, i)]
                )));
            }
            for j in 0..i {
                if (gamma[(i, j)] - gamma[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Matrix(format!(
                        "gamma is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let eig = gamma.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if lo <= 0.0 {
            return Err(Error::Matrix(format!(
                "gamma is not positive definite (smallest eigenvalue {lo:e})"
            )));
        }
        let condition = hi / lo;
        if condition > MAX_CONDITION {
            return Err(Error::Conditioning(format!(
                "gamma has condition number {condition:e} above {MAX_CONDITION:e}"
            )));
        }
        let cholesky = gamma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Matrix("Cholesky factorization failed".into()))?;
        Ok(Self {
            gamma,
            cholesky,
            condition,
            es,
            n0,
        })
    }

    pub fn k(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// `v^T Gamma^{-1} v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.k() {
            return Err(Error::Shape(format!(
                "expected a {}-vector, got {}",
                self.k(),
                v.len()
            )));
        }
        Ok(v.dot(&self.cholesky.solve(v)))
    }

    /// Scale `t` at which `t u` reaches the critical ellipsoid
    /// `alpha^T Gamma^{-1} alpha = E_s / N0`.
    pub fn critical_radius(&self, direction: &DVector<f64>) -> Result<f64> {
        let q = self.quad_form(direction)?;
        if q <= 0.0 {
            return Err(domain("direction must be nonzero"));
        }
        Ok((self.es / (self.n0 * q)).sqrt())
    }
}

/// `N0 alpha^T Gamma^{-1} alpha / (2 E_s)` on and inside the critical
/// ellipsoid, `+inf` outside. The boundary test allows a relative `1e-12`
/// for rounding in the quadratic form.
pub fn vector_linear_bound(model: &VectorLinearModel, alpha: &DVector<f64>) -> Result<BoundValue> {
    let q = model.quad_form(alpha)?;
    let b = if q * model.n0 <= model.es * (1.0 + 1e-12) {
        BoundValue::from_value(model.n0 * q / (2.0 * model.es))
    } else {
        BoundValue::divergent()
    };
    Ok(b.with_arg("condition", model.condition)
        .with_note(UNBIASED_NOTE))
}

/// `-1/2 ln(1 - (N0/E_s) alpha^T Gamma^{-1} alpha)` for the ML estimator.
pub fn vector_ml_lambda(model: &VectorLinearModel, alpha: &DVector<f64>) -> Result<f64> {
    Ok(ml_from_quad(model.n0 * model.quad_form(alpha)? / model.es))
}

/// The same value through `-1/2 ln det(I - (N0/E_s) alpha alpha^T Gamma^{-1})`.
pub fn vector_ml_lambda_det(model: &VectorLinearModel, alpha: &DVector<f64>) -> Result<f64> {
    if alpha.len() != model.k() {
        return Err(Error::Shape(format!(
            "expected a {}-vector, got {}",
            model.k(),
            alpha.len()
        )));
    }
    let inv = model.cholesky.inverse();
    let m = DMatrix::identity(model.k(), model.k())
        - alpha * alpha.transpose() * inv * (model.n0 / model.es);
    let det = m.determinant();
    Ok(if det <= 0.0 {
        f64::INFINITY
    } else {
        -0.5 * det.ln()
    })
}

/// Parameter range of a correlation profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaRange {
    Bounded { lo: f64, hi: f64 },
    Unbounded,
}

type RhoFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Normalized signal correlation `rho(theta, theta~) = ∫ x(t,theta) x(t,theta~) / E`
/// for a family of constant energy `E`.
#[derive(Clone)]
pub struct CorrelationProfile {
    rho: RhoFn,
    ex: f64,
    range: ThetaRange,
}

impl std::fmt::Debug for CorrelationProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrelationProfile")
            .field("ex", &self.ex)
            .field("range", &self.range)
            .finish_non_exhaustive()
    }
}

impl CorrelationProfile {
    /// Wraps an analytic `rho`. It is spot-checked for `|rho| <= 1` and a unit
    /// diagonal on a 41x41 lattice over the range (`[-10, 10]` if unbounded).
    pub fn from_fn(
        rho: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        ex: f64,
        range: ThetaRange,
    ) -> Result<Self> {
        require_positive("ex", ex)?;
        let (lo, hi) = match range {
            ThetaRange::Bounded { lo, hi } if lo < hi => (lo, hi),
            ThetaRange::Bounded { lo, hi } => {
                return Err(domain(format!("empty range [{lo}, {hi}]")))
            }
            ThetaRange::Unbounded => (-10.0, 10.0),
        };
        let g = Grid::new(lo, hi, 41)?;
        for a in g.points() {
            if (rho(a, a) - 1.0).abs() > 1e-9 {
                return Err(domain(format!("rho({a}, {a}) = {} is not 1", rho(a, a))));
            }
            for b in g.points() {
                if !(rho(a, b).abs() <= 1.0 + 1e-9) {
                    return Err(domain(format!("|rho({a}, {b})| exceeds 1")));
                }
            }
        }
        Ok(Self {
            rho: Arc::new(rho),
            ex,
            range,
        })
    }

    /// Bilinear interpolation of `values[i * n + j] = rho(theta_i, theta_j)`
    /// on a square grid; the range is the grid span.
    pub fn sampled(theta: Grid, values: Vec<f64>, ex: f64) -> Result<Self> {
        let n = theta.len();
        if values.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if (values[i * n + i] - 1.0).abs() > 1e-9 {
                return Err(domain(format!("rho diagonal at index {i} is not 1")));
            }
        }
        if values.iter().any(|v| !(v.abs() <= 1.0 + 1e-9)) {
            return Err(domain("|rho| exceeds 1"));
        }
        let (lo, h) = (theta.start(), theta.step());
        let rho = move |a: f64, b: f64| {
            let locate = |x: f64| {
                let u = ((x - lo) / h).clamp(0.0, (n - 1) as f64);
                let i = (u.floor() as usize).min(n - 2);
                (i, u - i as f64)
            };
            let ((i, fa), (j, fb)) = (locate(a), locate(b));
            let v = |r: usize, c: usize| values[r * n + c];
            (1.0 - fa) * ((1.0 - fb) * v(i, j) + fb * v(i, j + 1))
                + fa * ((1.0 - fb) * v(i + 1, j) + fb * v(i + 1, j + 1))
        };
        Ok(Self {
            rho: Arc::new(rho),
            ex,
            range: ThetaRange::Bounded {
                lo: theta.start(),
                hi: theta.end(),
            },
        })
    }

    pub fn rho(&self, theta: f64, theta_q: f64) -> f64 {
        (self.rho)(theta, theta_q)
    }

    pub fn ex(&self) -> f64 {
        self.ex
    }

    pub fn range(&self) -> ThetaRange {
        self.range
    }
}

const SCAN_POINTS: usize = 2001;
const STABILITY_TOL: f64 = 1e-4;

/// `sup_{theta~} [alpha L(theta~) + alpha (theta - theta~)^2 - 2E(1 - rho(theta, theta~))/N0]`.
///
/// Bounded ranges are scanned at two resolutions and polished near the best
/// cell; disagreement above `1e-4` is a resolution error. Unbounded ranges
/// are probed at `theta +- 2^j`; the bound is `+inf` once a probe exceeds
/// [`DIVERGENCE_THRESHOLD`]. The probe trace is kept in the notes.
pub fn nonlinear_bound(
    profile: &CorrelationProfile,
    alpha: f64,
    theta: f64,
    l_nb: impl Fn(f64) -> f64,
    n0: f64,
) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    require_positive("n0", n0)?;
    let f = |tq: f64| {
        let d = 2.0 * profile.ex * (1.0 - profile.rho(theta, tq)) / n0;
        generic_nonbayes_bound(alpha, l_nb(tq), theta - tq, d)
    };
    let (lo, hi) = match profile.range {
        ThetaRange::Bounded { lo, hi } => {
            if !(lo..=hi).contains(&theta) {
                return Err(domain(format!("theta = {theta} outside [{lo}, {hi}]")));
            }
            (lo, hi)
        }
        ThetaRange::Unbounded => return probe_unbounded(&f, theta),
    };
    let coarse = maximize_scan(f, lo, hi, SCAN_POINTS, 1e-12);
    let fine = maximize_scan(f, lo, hi, 2 * SCAN_POINTS - 1, 1e-12);
    if (coarse.value - fine.value).abs() > STABILITY_TOL {
        return Err(Error::Resolution(format!(
            "supremum did not stabilize: {} vs {} on refinement",
            coarse.value, fine.value
        )));
    }
    let best = if fine.value >= coarse.value {
        fine
    } else {
        coarse
    };
    Ok(BoundValue::from_value(best.value)
        .with_arg("theta_q", best.x)
        .with_evaluations(coarse.evaluations + fine.evaluations)
        .with_note(UNBIASED_NOTE))
}

fn probe_unbounded(f: &impl Fn(f64) -> f64, theta: f64) -> Result<BoundValue> {
    let mut trace = Vec::new();
    let mut best = (theta, f(theta));
    let mut last = best.1;
    for j in 0..64 {
        let r = 2f64.powi(j);
        let v = f(theta + r).max(f(theta - r));
        trace.push(format!("{r}:{v}"));
        if v > best.1 {
            best = (
                if f(theta + r) >= f(theta - r) {
                    theta + r
                } else {
                    theta - r
                },
                v,
            );
        }
        if v > DIVERGENCE_THRESHOLD {
            return Ok(BoundValue::divergent()
                .with_arg("theta_q", best.0)
                .with_evaluations(2 * (j as usize + 1) + 1)
                .with_note(UNBIASED_NOTE)
                .with_note(format!("probe trace {}", trace.join(" "))));
        }
        if j >= 4 && (v - last).abs() <= 1e-12 * v.abs().max(1.0) {
            break;
        }
        last = v;
    }
    Ok(BoundValue::from_value(best.1)
        .with_arg("theta_q", best.0)
        .with_note(UNBIASED_NOTE)
        .with_note(format!("probe trace {}", trace.join(" "))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::alpha_c_by_bisection;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn scalar_values() {
        let b = scalar_linear_bound(0.25, 1.0, 1.0).unwrap();
        assert_eq!(b.value, 0.125);
        assert_eq!(scalar_linear_bound(1.0, 2.0, 1.0).unwrap().value, 0.25);
        assert!(scalar_linear_bound(2.0001, 2.0, 1.0)
            .unwrap()
            .is_divergent());
        let ac = alpha_c_by_bisection(
            |a| scalar_linear_bound(a, 3.0, 0.5).unwrap(),
            0.0,
            100.0,
            1e-9,
        )
        .unwrap();
        assert!((ac - 6.0).abs() < 1e-6);
        assert!((scalar_ml_lambda(0.5, 1.0, 1.0).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(scalar_ml_lambda(1.0, 1.0, 1.0).unwrap(), f64::INFINITY);
        assert!(scalar_ml_lambda(1.0 - 1e-12, 1.0, 1.0).unwrap() > 10.0);
    }

    #[test]
    fn scalar_matches_generic_sup_over_grid() {
        let (es, n0) = (2.0, 0.7);
        for alpha in [0.1, 1.0, 2.5] {
            let f = |tq: f64| {
                generic_nonbayes_bound(
                    alpha,
                    n0 / (2.0 * es),
                    tq - 0.3,
                    (tq - 0.3).powi(2) * es / n0,
                )
            };
            let grid_max = Grid::new(-10.0, 10.0, 20001)
                .unwrap()
                .points()
                .map(f)
                .fold(f64::NEG_INFINITY, f64::max);
            let closed = scalar_linear_bound(alpha, es, n0).unwrap().value;
            assert!((grid_max - closed).abs() < 1e-8);
        }
        let f = |tq: f64| generic_nonbayes_bound(3.0, n0 / (2.0 * es), tq, tq * tq * es / n0);
        assert!(f(1e4) > 1e6);
    }

    #[test]
    fn ml_small_alpha_limit() {
        let (es, n0) = (1.0, 1.0);
        let a = 1e-3;
        let r =
            scalar_ml_lambda(a, es, n0).unwrap() / scalar_linear_bound(a, es, n0).unwrap().value;
        assert!((1.0..=1.001).contains(&r));
        let a = 1e-4;
        let gap =
            scalar_ml_lambda(a, es, n0).unwrap() - scalar_linear_bound(a, es, n0).unwrap().value;
        assert!((0.0..1e-6).contains(&gap));
    }

    fn random_gamma(k: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        let m: DMatrix<f64> = &a * a.transpose() + DMatrix::identity(k, k) * 0.5;
        let d = DVector::from_iterator(k, (0..k).map(|i| 1.0 / m[(i, i)].sqrt()));
        DMatrix::from_fn(k, k, |i, j| m[(i, j)] * d[i] * d[j])
    }

    #[test]
    fn vector_reduces_to_scalar() {
        let m = VectorLinearModel::new(DMatrix::from_element(1, 1, 1.0), 2.0, 0.5).unwrap();
        for a in [0.3, 1.5, 2.0] {
            let v = vector_linear_bound(&m, &DVector::from_element(1, a))
                .unwrap()
                .value;
            assert_eq!(v, scalar_linear_bound(a * a, 2.0, 0.5).unwrap().value);
        }
    }

    #[test]
    fn vector_matches_explicit_inverse() {
        let g = random_gamma(3, 9);
        let m = VectorLinearModel::new(g.clone(), 5.0, 1.0).unwrap();
        let a = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let oracle = (a.transpose() * g.try_inverse().unwrap() * &a)[(0, 0)] / (2.0 * 5.0);
        assert!((vector_linear_bound(&m, &a).unwrap().value - oracle).abs() < 1e-10);
        let det = vector_ml_lambda_det(&m, &a).unwrap();
        assert!((det - vector_ml_lambda(&m, &a).unwrap()).abs() < 1e-10);
        assert_eq!(vector_ml_lambda(&m, &DVector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn vector_ellipsoid_boundary() {
        let g = random_gamma(3, 4);
        let m = VectorLinearModel::new(g, 2.0, 1.0).unwrap();
        let u = DVector::from_vec(vec![1.0, 0.5, -0.25]);
        let r = m.critical_radius(&u).unwrap();
        let on = vector_linear_bound(&m, &(&u * r)).unwrap();
        assert!(on.is_finite());
        assert!(vector_linear_bound(&m, &(&u * (r * (1.0 + 1e-9))))
            .unwrap()
            .is_divergent());
        assert_eq!(
            vector_ml_lambda(&m, &(&u * (r * (1.0 + 1e-9)))).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn identity_gamma_uses_norm() {
        let m = VectorLinearModel::new(DMatrix::identity(2, 2), 1.0, 1.0).unwrap();
        let a = DVector::from_vec(vec![0.3, 0.4]);
        assert!(
            (vector_ml_lambda(&m, &a).unwrap() - scalar_ml_lambda(0.25, 1.0, 1.0).unwrap()).abs()
                < 1e-15
        );
    }

    #[test]
    fn rejects_bad_gamma() {
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            VectorLinearModel::new(not_pd, 1.0, 1.0),
            Err(Error::Matrix(_))
        ));
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 1.0 - 1e-14, 1.0 - 1e-14, 1.0]);
        assert!(VectorLinearModel::new(near, 1.0, 1.0).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(
            VectorLinearModel::new(asym, 1.0, 1.0),
            Err(Error::Matrix(_))
        ));
    }

    proptest! {
        #[test]
        fn direction_invariance(seed in 0u64..1000, t in 0.01f64..3.0) {
            let m = VectorLinearModel::new(random_gamma(3, seed), 4.0, 1.5).unwrap();
            let u = DVector::from_vec(vec![0.6, -0.3, 0.74]);
            let q = m.quad_form(&u).unwrap();
            let v = vector_linear_bound(&m, &(&u * t)).unwrap().value;
            let s = scalar_linear_bound(t * t, 4.0 / q, 1.5).unwrap().value;
            prop_assert!(v == s || (v - s).abs() <= 1e-12 * s.abs());
        }

        #[test]
        fn ml_dominates_bound(r in 0.0f64..0.999) {
            let ml = scalar_ml_lambda(r * 2.0, 2.0, 1.0).unwrap();
            prop_assert!(ml >= scalar_linear_bound(r * 2.0, 2.0, 1.0).unwrap().value);
        }
    }

    #[test]
    fn unbounded_range_diverges() {
        let p = CorrelationProfile::from_fn(
            |a, b| (-(a - b) * (a - b)).exp(),
            10.0,
            ThetaRange::Unbounded,
        )
        .unwrap();
        let b = nonlinear_bound(&p, 1e-3, 0.0, |_| 0.01, 1.0).unwrap();
        assert!(b.is_divergent());
        assert!(b
            .diagnostics
            .notes
            .iter()
            .any(|n| n.starts_with("probe trace")));
    }

    #[test]
    fn diagonal_probe_and_dense_oracle() {
        let c = 40.0;
        let p = CorrelationProfile::from_fn(
            move |a, b| (-c * (a - b) * (a - b)).exp(),
            1.0,
            ThetaRange::Bounded { lo: 0.0, hi: 1.0 },
        )
        .unwrap();
        let l = |t: f64| 0.01 + 0.005 * t;
        let (alpha, theta, n0) = (3.0, 0.35, 0.2);
        let f = |tq: f64| {
            generic_nonbayes_bound(
                alpha,
                l(tq),
                theta - tq,
                2.0 * (1.0 - p.rho(theta, tq)) / n0,
            )
        };
        assert_eq!(f(theta), alpha * l(theta));
        let brute = Grid::new(0.0, 1.0, 100_000)
            .unwrap()
            .points()
            .map(f)
            .fold(f64::NEG_INFINITY, f64::max);
        let b = nonlinear_bound(&p, alpha, theta, l, n0).unwrap();
        assert!((b.value - brute).abs() < 1e-4, "{} vs {brute}", b.value);
        assert!(b.value >= brute - 1e-12);
    }

    #[test]
    fn sampled_profile_interpolates() {
        let g = Grid::new(0.0, 1.0, 101).unwrap();
        let pts: Vec<f64> = g.points().collect();
        let vals: Vec<f64> = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| (3.0 * (a - b)).cos()))
            .collect();
        let p = CorrelationProfile::sampled(g, vals, 1.0).unwrap();
        assert!((p.rho(0.2, 0.7) - (1.5f64).cos()).abs() < 1e-12);
        assert!((p.rho(0.205, 0.7) - (3.0 * 0.495f64).cos()).abs() < 1e-3);
        assert!(CorrelationProfile::sampled(g, vec![0.5; 101 * 101], 1.0).is_err());
    }
}
