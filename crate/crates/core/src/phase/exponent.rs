use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::grid::Grid;
use crate::optimize::{golden_section_max, golden_section_min};

/// Distance of the `theta` grid from the endpoints, where `D(q || theta)` blows up.
pub const THETA_INSET: f64 = 1e-6;

const MIN_POINTS: usize = 101;
const GOLDEN_TOL: f64 = 1e-11;

/// `E(a) = max_q min_t max_theta [a (t - theta)^2 - D(q || theta)]` with
/// `alpha = a n` in the Bernoulli model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentProblem {
    a: f64,
    q_points: usize,
    t_points: usize,
    theta_points: usize,
}

impl ExponentProblem {
    /// Default grids of 201 `q`, 401 `t` and 401 `theta` points.
    pub fn new(a: f64) -> Result<Self> {
        Self::with_grids(a, 201, 401, 401)
    }

    pub fn with_grids(
        a: f64,
        q_points: usize,
        t_points: usize,
        theta_points: usize,
    ) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(domain(format!("a must be finite and nonnegative, got {a}")));
        }
        if q_points.min(t_points).min(theta_points) < MIN_POINTS {
            return Err(Error::Resolution(format!(
                "grids need at least {MIN_POINTS} points"
            )));
        }
        Ok(Self {
            a,
            q_points,
            t_points,
            theta_points,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn q_grid(&self) -> Grid {
        Grid::new(0.0, 1.0, self.q_points).expect("valid q grid")
    }

    fn key(&self) -> (u64, usize, usize, usize) {
        (
            self.a.to_bits(),
            self.q_points,
            self.t_points,
            self.theta_points,
        )
    }
}

/// Inner solver for one problem: log tables on the `theta` grid.
struct Solver {
    a: f64,
    t: Grid,
    theta: Vec<f64>,
    ln_theta: Vec<f64>,
    ln_comp: Vec<f64>,
}

fn neg_entropy(q: f64) -> f64 {
    let xlx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    xlx(q) + xlx(1.0 - q)
}

impl Solver {
    fn new(p: &ExponentProblem) -> Self {
        let theta_grid =
            Grid::new(THETA_INSET, 1.0 - THETA_INSET, p.theta_points).expect("valid theta grid");
        let theta: Vec<f64> = theta_grid.points().collect();
        Self {
            a: p.a,
            t: Grid::new(0.0, 1.0, p.t_points).expect("valid t grid"),
            ln_theta: theta.iter().map(|x| x.ln()).collect(),
            ln_comp: theta.iter().map(|x| (-x).ln_1p()).collect(),
            theta,
        }
    }

    /// `a (t - theta)^2 - D(q || theta)` off the grid.
    fn objective(&self, q: f64, t: f64, th: f64) -> f64 {
        let cross = if q == 0.0 { 0.0 } else { q * th.ln() }
            + if q == 1.0 {
                0.0
            } else {
                (1.0 - q) * (-th).ln_1p()
            };
        self.a * (t - th) * (t - th) + cross - neg_entropy(q)
    }

    fn on_grid(&self, q: f64, t: f64, j: usize, h: f64) -> f64 {
        let d = t - self.theta[j];
        let cross = if q == 0.0 { 0.0 } else { q * self.ln_theta[j] }
            + if q == 1.0 {
                0.0
            } else {
                (1.0 - q) * self.ln_comp[j]
            };
        self.a * d * d + cross - h
    }

    /// Max over the `theta` grid only.
    fn max_theta_raw(&self, q: f64, t: f64) -> f64 {
        let h = neg_entropy(q);
        (0..self.theta.len())
            .map(|j| self.on_grid(q, t, j, h))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Max over `theta`: every discrete local maximum of the grid scan is
    /// polished, since the objective can have a peak on each side of `t`.
    fn max_theta(&self, q: f64, t: f64) -> f64 {
        let h = neg_entropy(q);
        let n = self.theta.len();
        let v: Vec<f64> = (0..n).map(|j| self.on_grid(q, t, j, h)).collect();
        let mut best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..n {
            let left = j == 0 || v[j] >= v[j - 1];
            let right = j + 1 == n || v[j] >= v[j + 1];
            if left && right {
                let lo = self.theta[j.saturating_sub(1)];
                let hi = self.theta[(j + 1).min(n - 1)];
                let m = golden_section_max(|th| self.objective(q, t, th), lo, hi, GOLDEN_TOL);
                best = best.max(m.value);
            }
        }
        best
    }

    /// `(argmin_t, min_t)` of `max_theta`, smallest `t` on ties.
    fn min_t(&self, q: f64) -> (f64, f64) {
        if self.a == 0.0 {
            // the objective is flat in t; the divergence term alone picks theta = q
            return (q, 0.0);
        }
        let n = self.t.len();
        let mut best_j = 0;
        let mut best_v = f64::INFINITY;
        for j in 0..n {
            let v = self.max_theta_raw(q, self.t.point(j));
            if v < best_v {
                best_v = v;
                best_j = j;
            }
        }
        let lo = self.t.point(best_j.saturating_sub(3));
        let hi = self.t.point((best_j + 3).min(n - 1));
        let m = golden_section_min(|t| self.max_theta(q, t), lo, hi, GOLDEN_TOL);
        let (mut t, mut v) = (m.x, m.value);
        for edge in [lo, hi] {
            let ve = self.max_theta(q, edge);
            if ve < v || (ve == v && edge < t) {
                t = edge;
                v = ve;
            }
        }
        (t, v)
    }
}

/// The estimator curve and exponent from one nested optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentCurve {
    pub a: f64,
    /// `E(a)`, clamped at its lower bound 0.
    pub exponent: f64,
    /// Maximizing empirical frequency.
    pub q_star: f64,
    pub q: Vec<f64>,
    /// `theta_hat(q)` on the `q` grid.
    pub estimator: Vec<f64>,
    /// `min_t max_theta [...]` on the `q` grid.
    pub minimax: Vec<f64>,
}

impl ExponentCurve {
    /// `(min, max)` of the estimator over the grid.
    pub fn estimator_range(&self) -> (f64, f64) {
        self.estimator
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

fn solve(problem: &ExponentProblem) -> ExponentCurve {
    let solver = Solver::new(problem);
    let q: Vec<f64> = problem.q_grid().points().collect();
    let rows: Vec<(f64, f64)> = q.par_iter().map(|&qi| solver.min_t(qi)).collect();
    let (estimator, minimax): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let (mut best_i, mut best_v) = (0, f64::NEG_INFINITY);
    for (i, &v) in minimax.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = q[best_i.saturating_sub(1)];
    let hi = q[(best_i + 1).min(q.len() - 1)];
    let polished = golden_section_max(|x| solver.min_t(x).1, lo, hi, 1e-9);
    let (q_star, value) = if polished.value > best_v {
        (polished.x, polished.value)
    } else {
        (q[best_i], best_v)
    };
    ExponentCurve {
        a: problem.a,
        exponent: value.max(0.0),
        q_star,
        q,
        estimator,
        minimax,
    }
}

type CurveCache = Mutex<HashMap<(u64, usize, usize, usize), Arc<ExponentCurve>>>;

fn cache() -> &'static CurveCache {
    static CACHE: OnceLock<CurveCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `E(a)` together with the estimator curve. Results are memoized per problem.
pub fn bernoulli_bayes_exponent(problem: &ExponentProblem) -> Arc<ExponentCurve> {
    if let Some(c) = cache().lock().expect("cache lock").get(&problem.key()) {
        return Arc::clone(c);
    }
    let curve = Arc::new(solve(problem));
    cache()
        .lock()
        .expect("cache lock")
        .insert(problem.key(), Arc::clone(&curve));
    curve
}

/// `E(a)` in nats per symbol.
pub fn error_exponent(problem: &ExponentProblem) -> f64 {
    bernoulli_bayes_exponent(problem).exponent
}

/// `argmin_t max_theta [a (t - theta)^2 - D(q || theta)]` for one empirical
/// frequency, on the default grids. At `a = 0` this is `q`.
pub fn asymptotic_estimator(q: f64, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(Solver::new(&ExponentProblem::new(a)?).min_t(q).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::binary_divergence;

    fn small(a: f64) -> ExponentProblem {
        ExponentProblem::with_grids(a, 101, 201, 201).unwrap()
    }

    #[test]
    fn zero_for_a_up_to_two() {
        for a in [0.0, 0.5, 1.0, 2.0] {
            assert!(error_exponent(&small(a)).abs() <= 1e-4, "a = {a}");
        }
    }

    #[test]
    fn pinsker_upper_chain_on_grid() {
        for a in [0.5, 1.0, 2.0] {
            let g = Grid::new(THETA_INSET, 1.0 - THETA_INSET, 201).unwrap();
            for q in g.points() {
                for th in g.points() {
                    let f = a * (q - th) * (q - th) - binary_divergence(q, th);
                    assert!(f <= 1e-12 && (a - 2.0) * (q - th) * (q - th) <= 0.0);
                }
            }
        }
    }

    #[test]
    fn positive_past_two_and_monotone() {
        let e: Vec<f64> = [2.5, 4.0, 10.0]
            .iter()
            .map(|&a| error_exponent(&small(a)))
            .collect();
        assert!(e[0] >= 1e-3);
        assert!(e.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn a_zero_estimator_is_identity() {
        let c = bernoulli_bayes_exponent(&small(0.0));
        assert!(c.q.iter().zip(&c.estimator).all(|(q, t)| q == t));
        assert_eq!(c.exponent, 0.0);
    }

    #[test]
    fn estimator_symmetric_monotone_and_shrinking() {
        let c10 = bernoulli_bayes_exponent(&small(10.0));
        let n = c10.q.len();
        for i in 0..n {
            assert!((c10.estimator[i] + c10.estimator[n - 1 - i] - 1.0).abs() <= 1e-6);
        }
        assert!(c10.estimator.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!((asymptotic_estimator(0.5, 10.0).unwrap() - 0.5).abs() < 1e-6);
        let c1 = bernoulli_bayes_exponent(&small(1.0));
        let (lo10, hi10) = c10.estimator_range();
        let (lo1, hi1) = c1.estimator_range();
        assert!(lo1 < lo10 && hi10 < hi1);
        println!("a = 10 estimator range [{lo10:.5}, {hi10:.5}]");
    }

    #[test]
    fn estimator_equalizes_the_two_peaks() {
        // at the optimum the theta-maximum is attained on both sides of t
        let s = Solver::new(&small(10.0));
        let (t, v) = s.min_t(0.2);
        let left = golden_section_max(|th| s.objective(0.2, t, th), THETA_INSET, t, 1e-12).value;
        let right =
            golden_section_max(|th| s.objective(0.2, t, th), t, 1.0 - THETA_INSET, 1e-12).value;
        assert!((left - v).abs() < 1e-6 && (right - v).abs() < 1e-6);
    }
}
