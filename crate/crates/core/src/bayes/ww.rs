use crate::bound::BoundValue;
use crate::error::{require_positive, Result};

/// Mean-square error floor coefficient for rectangular-pulse delay
/// estimation: `MMSE >= 0.324 tau^2 / gamma^2`.
pub const WW_MSE_COEF: f64 = 0.324;

/// Stationary point of `alpha 0.324 t^2 / gamma^2 - 2 gamma (1 - sqrt(tau / t))`
/// in `t`: `(gamma^6 tau / (0.648 alpha)^2)^(1/5)`.
///
/// The objective is convex in `t`, so this is its smallest value over
/// `t >= tau`. Larger reference widths are not used because the
/// `0.324 t^2 / gamma^2` floor only holds while the reference pulse is short
/// against the delay prior's support, which this model does not carry.
pub fn ww_tau_opt(alpha: f64, gamma: f64, tau: f64) -> f64 {
    let c = 2.0 * WW_MSE_COEF;
    (gamma.powi(6) * tau / (c * c * alpha * alpha)).powf(0.2)
}

fn ww_objective(alpha: f64, gamma: f64, tau: f64, tau_q: f64) -> f64 {
    alpha * WW_MSE_COEF * tau_q * tau_q / (gamma * gamma)
        - 2.0 * gamma * (1.0 - (tau / tau_q).sqrt())
}

/// Delay bound for a rectangular pulse of width `tau` and `gamma = E_x/N0`,
/// with a reference pulse of width `tau_q >= tau` set to [`ww_tau_opt`].
///
/// Inside the window `tau_opt >= tau` the value is
/// `2.2922 (alpha gamma^2 tau^2)^(1/5) - 2 gamma` at `tau_q = tau_opt`.
/// Outside it the reference collapses to `tau_q = tau` and the result is the
/// Jensen bound, flagged out-of-window.
pub fn ww_rect_delay_bound(alpha: f64, gamma: f64, tau: f64) -> Result<BoundValue> {
    require_positive("alpha", alpha)?;
    require_positive("gamma", gamma)?;
    require_positive("tau", tau)?;
    let t_opt = ww_tau_opt(alpha, gamma, tau);
    let inside = t_opt >= tau;
    let tau_q = t_opt.max(tau);
    let b = BoundValue::from_value(ww_objective(alpha, gamma, tau, tau_q))
        .with_arg("tau_q", tau_q)
        .with_window(inside);
    Ok(if b.is_nontrivial() {
        b
    } else {
        b.with_note("trivial: bound is not positive")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::BoundStatus;
    use crate::optimize::bisect_root;

    #[test]
    fn unit_parameters() {
        let b = ww_rect_delay_bound(1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.status, BoundStatus::Finite);
        assert!((b.value - 0.2922).abs() < 1e-4, "{}", b.value);
        assert!((b.arg("tau_q").unwrap() - 1.1895).abs() < 1e-4);
    }

    #[test]
    fn reference_width_is_stationary_and_convex() {
        for (alpha, gamma, tau) in [(1.0, 1.0, 1.0), (0.3, 4.0, 0.2), (5.0, 2.0, 0.7)] {
            let t = ww_tau_opt(alpha, gamma, tau);
            let f = |x| ww_objective(alpha, gamma, tau, x);
            let h = 1e-4 * t;
            assert!(((f(t + h) - f(t - h)) / (2.0 * h)).abs() < 1e-6);
            assert!(f(t + h) + f(t - h) - 2.0 * f(t) > 0.0);
        }
    }

    #[test]
    fn window_edges() {
        let (alpha, tau): (f64, f64) = (2.0, 0.5);
        let scale = (alpha * tau * tau).powf(1.0 / 3.0);
        let zero = bisect_root(
            |g| ww_rect_delay_bound(alpha, g, tau).unwrap().value,
            0.9 * scale,
            3.0 * scale,
            1e-13,
        )
        .unwrap();
        assert!((zero / scale - 1.2552).abs() < 1e-3);
        let edge = bisect_root(
            |g| ww_tau_opt(alpha, g, tau) - tau,
            0.1 * scale,
            3.0 * scale,
            1e-13,
        )
        .unwrap();
        assert!((edge / scale - 0.8654).abs() < 1e-3);
        let below = ww_rect_delay_bound(alpha, 0.5 * edge, tau).unwrap();
        assert_eq!(below.status, BoundStatus::OutOfWindow);
        assert_eq!(below.arg("tau_q"), Some(tau));
    }
}
