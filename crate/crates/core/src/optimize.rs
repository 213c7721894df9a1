//! Scalar and low-dimensional optimizers used to tighten bounds over their
//! free parameters.
//!
//! Objectives may return `+inf` (a divergent bound) or NaN (treated as an
//! infeasible point). A `+inf` value found anywhere wins immediately.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a scalar maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Maximum {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = sanitize(f(x1));
    let mut f2 = sanitize(f(x2));
    let mut evals = 2;
    let tol = tol.max(f64::EPSILON * (a.abs() + b.abs()));
    while (b - a) > tol && evals < 400 {
        if f1 == f64::INFINITY {
            return Maximum {
                x: x1,
                value: f1,
                evaluations: evals,
            };
        }
        if f2 == f64::INFINITY {
            return Maximum {
                x: x2,
                value: f2,
                evaluations: evals,
            };
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = sanitize(f(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = sanitize(f(x2));
        }
        evals += 1;
    }
    if f1 >= f2 {
        Maximum {
            x: x1,
            value: f1,
            evaluations: evals,
        }
    } else {
        Maximum {
            x: x2,
            value: f2,
            evaluations: evals,
        }
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Maximum {
    let m = golden_section_max(|x| -f(x), a, b, tol);
    Maximum {
        value: -m.value,
        ..m
    }
}

/// Maximizes `f` on `[a, b]`: a uniform scan of `scan` points locates the
/// best cell, then golden-section polishes inside the neighbouring cells.
/// Endpoint optima are returned exactly when they beat the interior.
pub fn maximize_scan(f: impl Fn(f64) -> f64, a: f64, b: f64, scan: usize, tol: f64) -> Maximum {
    let scan = scan.max(3);
    let h = (b - a) / (scan - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..scan {
        let x = if i + 1 == scan { b } else { a + h * i as f64 };
        let v = sanitize(f(x));
        if v == f64::INFINITY {
            return Maximum {
                x,
                value: v,
                evaluations: i + 1,
            };
        }
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let best_x = if best_i + 1 == scan {
        b
    } else {
        a + h * best_i as f64
    };
    if best_v == f64::NEG_INFINITY {
        return Maximum {
            x: best_x,
            value: best_v,
            evaluations: scan,
        };
    }
    let lo = if best_i == 0 {
        a
    } else {
        a + h * (best_i - 1) as f64
    };
    let hi = if best_i + 1 >= scan - 1 {
        b
    } else {
        a + h * (best_i + 1) as f64
    };
    let polished = golden_section_max(&f, lo, hi, tol);
    let evaluations = scan + polished.evaluations;
    if polished.value > best_v {
        Maximum {
            evaluations,
            ..polished
        }
    } else {
        Maximum {
            x: best_x,
            value: best_v,
            evaluations,
        }
    }
}

/// Like [`maximize_scan`] but the search variable is `ln x` over `[lo, hi]`, `lo > 0`.
pub fn maximize_log_scan(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    scan: usize,
    tol: f64,
) -> Maximum {
    let m = maximize_scan(|u| f(u.exp()), lo.ln(), hi.ln(), scan, tol);
    Maximum { x: m.x.exp(), ..m }
}

/// Bisection for a root of `f` on a bracket with a sign change.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Smallest `x` in `[lo, hi]` where a monotone predicate switches to `true`,
/// to within `tol`. Returns `None` if the predicate is false at `hi`.
pub fn bisect_onset(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    if !pred(hi) {
        return None;
    }
    if pred(lo) {
        return Some(lo);
    }
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        if pred(m) {
            hi = m;
        } else {
            lo = m;
        }
    }
    Some(hi)
}

/// Result of a two-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum2 {
    pub x: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
}

/// Coordinate ascent on a box with one restart per entry of `starts`. Each
/// coordinate step is a scan plus golden-section polish.
pub fn coordinate_ascent(
    f: impl Fn(f64, f64) -> f64,
    bounds: [(f64, f64); 2],
    starts: &[[f64; 2]],
    sweeps: usize,
) -> Maximum2 {
    let mut best = Maximum2 {
        x: starts
            .first()
            .copied()
            .unwrap_or([bounds[0].0, bounds[1].0]),
        value: f64::NEG_INFINITY,
        evaluations: 0,
    };
    let mut evals = 0;
    for start in starts {
        let mut x = *start;
        let mut value = sanitize(f(x[0], x[1]));
        evals += 1;
        for _ in 0..sweeps {
            let before = value;
            let m0 = maximize_scan(|u| f(u, x[1]), bounds[0].0, bounds[0].1, 33, 1e-10);
            evals += m0.evaluations;
            if m0.value >= value {
                x[0] = m0.x;
                value = m0.value;
            }
            let m1 = maximize_scan(|v| f(x[0], v), bounds[1].0, bounds[1].1, 33, 1e-10);
            evals += m1.evaluations;
            if m1.value >= value {
                x[1] = m1.x;
                value = m1.value;
            }
            if value == f64::INFINITY || (value - before).abs() <= 1e-12 * (1.0 + value.abs()) {
                break;
            }
        }
        if value > best.value {
            best = Maximum2 {
                x,
                value,
                evaluations: 0,
            };
        }
    }
    best.evaluations = evals;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let m = golden_section_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((m.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn scan_handles_endpoint_maximum() {
        let m = maximize_scan(|x| x, 0.0, 1.0, 11, 1e-10);
        assert_eq!(m.x, 1.0);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn scan_returns_infinity_witness() {
        let m = maximize_scan(
            |x| if x > 0.5 { f64::INFINITY } else { x },
            0.0,
            1.0,
            11,
            1e-10,
        );
        assert_eq!(m.value, f64::INFINITY);
        assert!(m.x > 0.5);
    }

    #[test]
    fn scan_beats_multimodal_trap() {
        let f =
            |x: f64| (-(x - 0.1).powi(2) * 400.0).exp() + 2.0 * (-(x - 0.8).powi(2) * 400.0).exp();
        let m = maximize_scan(f, 0.0, 1.0, 101, 1e-12);
        assert!((m.x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn bisection_helpers() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let onset = bisect_onset(|x| x > 0.75, 0.0, 1.0, 1e-9).unwrap();
        assert!((onset - 0.75).abs() < 1e-8);
        assert!(bisect_onset(|_| false, 0.0, 1.0, 1e-9).is_none());
    }

    #[test]
    fn coordinate_ascent_on_separable_bowl() {
        let m = coordinate_ascent(
            |x, y| -(x - 1.0).powi(2) - 2.0 * (y + 0.5).powi(2),
            [(-3.0, 3.0), (-3.0, 3.0)],
            &[[0.0, 0.0], [2.0, 2.0], [-2.0, -2.0]],
            10,
        );
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 0.5).abs() < 1e-6);
    }
}
