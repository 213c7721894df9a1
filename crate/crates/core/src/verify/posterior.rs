use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;
use crate::optimize::golden_section_min;

const DAMPING: f64 = 0.5;
const STEP_TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;

/// Largest share of the tilted mass allowed on the outer 1% of a grid
/// posterior at an end where the tilted density still grows outward.
const EDGE_SHARE: f64 = 1e-6;

/// A posterior over `theta`: a sampled density or finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Grid(GridFunction),
    Discrete { points: Vec<f64>, weights: Vec<f64> },
}

impl Posterior {
    /// A grid density normalized to unit mass within `1e-6`.
    pub fn grid(density: GridFunction) -> Result<Self> {
        if density.values().iter().any(|v| !(*v >= 0.0)) {
            return Err(domain("posterior density must be nonnegative"));
        }
        if (density.integral() - 1.0).abs() > 1e-6 {
            return Err(domain(format!(
                "posterior integrates to {}",
                density.integral()
            )));
        }
        Ok(Posterior::Grid(density))
    }

    /// Atoms with weights summing to 1 within `1e-12`.
    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Shape(
                "points and weights must be nonempty and equal in length".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(domain("weights must be nonnegative and sum to 1"));
        }
        Ok(Posterior::Discrete { points, weights })
    }

    /// `(theta_i, ln mass_i)` with trapezoid masses for grids.
    fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Posterior::Grid(f) => (0..f.grid().len())
                .map(|i| {
                    (
                        f.grid().point(i),
                        (f.values()[i] * f.grid().trapezoid_weight(i)).ln(),
                    )
                })
                .collect(),
            Posterior::Discrete { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(p, w)| (*p, w.ln()))
                .collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms().iter().map(|(t, lw)| t * lw.exp()).sum()
    }
}

/// Result of the risk-sensitive posterior estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorEstimate {
    pub eta: f64,
    /// `ln E{exp(alpha (Theta - eta)^2) | y}` at `eta`.
    pub log_moment: f64,
    pub iterations: usize,
    /// The fixed-point iteration stalled and direct minimization was used.
    pub fell_back: bool,
}

fn lse(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_moment(atoms: &[(f64, f64)], alpha: f64, eta: f64) -> f64 {
    lse(atoms
        .iter()
        .map(|(t, lw)| lw + alpha * (t - eta) * (t - eta)))
}

/// `E{Theta w} / E{w}` with `w = exp(alpha (Theta - eta)^2)`.
fn tilted_mean(atoms: &[(f64, f64)], alpha: f64, eta: f64) -> f64 {
    let logs: Vec<f64> = atoms
        .iter()
        .map(|(t, lw)| lw + alpha * (t - eta) * (t - eta))
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (num, den) = atoms
        .iter()
        .zip(&logs)
        .fold((0.0, 0.0), |(n, d), ((t, _), l)| {
            let w = (l - m).exp();
            (n + t * w, d + w)
        });
    num / den
}

/// Rejects a grid posterior whose tilted density grows toward a grid end
/// while that end carries non-negligible tilted mass. A grid posterior is
/// read as the truncation of a density on the real line, so this signals
/// that the untruncated integral diverges.
fn tail_probe(post: &Posterior, atoms: &[(f64, f64)], alpha: f64, eta: f64) -> Result<()> {
    let Posterior::Grid(f) = post else {
        return Ok(());
    };
    let n = f.grid().len();
    let k = (n / 100).max(1);
    let all: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            (
                f.grid().point(i),
                (f.values()[i] * f.grid().trapezoid_weight(i)).ln(),
            )
        })
        .collect();
    // tilted log density, without the trapezoid end weights
    let tilted = |i: usize| f.values()[i].ln() + alpha * (f.grid().point(i) - eta).powi(2);
    let total = log_moment(atoms, alpha, eta);
    for (edge, outer, inner) in [(&all[..k], 0, k), (&all[n - k..], n - 1, n - 1 - k)] {
        let growing = tilted(outer) > tilted(inner);
        let share = (log_moment(edge, alpha, eta) - total).exp();
        if growing && share > EDGE_SHARE {
            return Err(Error::DivergenceRisk(format!(
                "tilted posterior grows toward the grid edge and holds {share:e} of its mass there; alpha is past the tail threshold"
            )));
        }
    }
    Ok(())
}

/// Minimizer `eta` of `E{exp(alpha (Theta - eta)^2) | y}`, the fixed point
/// of `eta = E{Theta w} / E{w}`. Damped iteration from the posterior mean;
/// if it does not settle, golden-section search on the (convex) log moment.
pub fn risk_sensitive_posterior_estimator(
    post: &Posterior,
    alpha: f64,
) -> Result<PosteriorEstimate> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(domain(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    let atoms: Vec<(f64, f64)> = post
        .atoms()
        .into_iter()
        .filter(|(_, lw)| lw.is_finite())
        .collect();
    if atoms.is_empty() {
        return Err(domain("posterior has no mass"));
    }
    let mean = post.mean();
    tail_probe(post, &atoms, alpha, mean)?;
    let mut eta = mean;
    for it in 1..=MAX_ITER {
        let next = (1.0 - DAMPING) * eta + DAMPING * tilted_mean(&atoms, alpha, eta);
        if !next.is_finite() {
            return Err(Error::Divergence(
                "tilted posterior integral diverges".into(),
            ));
        }
        let step = (next - eta).abs();
        eta = next;
        if step < STEP_TOL {
            tail_probe(post, &atoms, alpha, eta)?;
            return Ok(PosteriorEstimate {
                eta,
                log_moment: log_moment(&atoms, alpha, eta),
                iterations: it,
                fell_back: false,
            });
        }
    }
    let lo = atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
    let hi = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let m = golden_section_min(|e| log_moment(&atoms, alpha, e), lo, hi, 1e-12);
    if !m.value.is_finite() {
        return Err(Error::Divergence(
            "tilted posterior integral diverges".into(),
        ));
    }
    Ok(PosteriorEstimate {
        eta: m.x,
        log_moment: m.value,
        iterations: MAX_ITER,
        fell_back: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn gaussian(m: f64, v: f64) -> Posterior {
        let s = v.sqrt();
        let g = Grid::new(m - 12.0 * s, m + 12.0 * s, 4001).unwrap();
        let f = g.sample(|t| {
            (-(t - m) * (t - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        });
        Posterior::grid(f.normalized().unwrap()).unwrap()
    }

    #[test]
    fn gaussian_posterior_gives_mean() {
        let p = gaussian(0.7, 0.2);
        let e = risk_sensitive_posterior_estimator(&p, 1.0).unwrap();
        assert!((e.eta - 0.7).abs() < 1e-8);
        // ln E exp(alpha (Theta - m)^2) = -1/2 ln(1 - 2 alpha v)
        assert!((e.log_moment + 0.5 * (1.0f64 - 0.4).ln()).abs() < 1e-6);
    }

    #[test]
    fn small_alpha_gives_posterior_mean() {
        let g = Grid::new(0.0, 1.0, 2001).unwrap();
        let p = Posterior::grid(g.sample(|t| t * t * (1.0 - t)).normalized().unwrap()).unwrap();
        let e = risk_sensitive_posterior_estimator(&p, 1e-9).unwrap();
        assert!((e.eta - p.mean()).abs() < 1e-8);
        let e = risk_sensitive_posterior_estimator(&p, 3.0).unwrap();
        assert!(
            e.eta < p.mean(),
            "risk aversion pulls the skewed estimate to the middle"
        );
    }

    #[test]
    fn two_point_posterior_matches_direct_minimization() {
        for (w, alpha) in [(0.5, 2.0), (0.3, 1.0), (0.1, 8.0)] {
            let p = Posterior::discrete(vec![0.0, 1.0], vec![1.0 - w, w]).unwrap();
            let e = risk_sensitive_posterior_estimator(&p, alpha).unwrap();
            let f = |eta: f64| {
                (1.0 - w) * (alpha * eta * eta).exp()
                    + w * (alpha * (1.0 - eta) * (1.0 - eta)).exp()
            };
            let direct = golden_section_min(f, 0.0, 1.0, 1e-13).x;
            assert!((e.eta - direct).abs() < 1e-8, "{} vs {direct}", e.eta);
        }
        let p = Posterior::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(
            risk_sensitive_posterior_estimator(&p, 5.0).unwrap().eta,
            0.5
        );
    }

    #[test]
    fn tail_probe_rejects_alpha_beyond_threshold() {
        let p = gaussian(0.0, 1.0);
        assert!(matches!(
            risk_sensitive_posterior_estimator(&p, 0.6),
            Err(Error::DivergenceRisk(_))
        ));
    }
}
