//! Closed-form information measures shared by the bound families: binary and
//! Gaussian divergences, the Gaussian quadratic moment generating function,
//! the Rényi divergence between a constant-energy signal model and a
//! linear-Gaussian reference, and tilted priors `Q_beta = P^beta / Z(beta)`.
//!
//! Every divergence is in nats. `+inf` is returned, not raised, when a
//! quantity legitimately diverges.

use std::f64::consts::PI;

use crate::error::{domain, require_nonnegative, require_positive, Error, Result};
use crate::grid::GridFunction;

/// `x ln(x / y)` with the `0 ln 0 = 0` convention.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Binary divergence `D(q || theta)` in nats.
///
/// Endpoints are allowed for both arguments; a mismatched endpoint gives
/// `+inf`. Arguments outside `[0, 1]` give NaN.
pub fn binary_divergence(q: f64, theta: f64) -> f64 {
    if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&theta) {
        return f64::NAN;
    }
    let d = xlogx_over(q, theta) + xlogx_over(1.0 - q, 1.0 - theta);
    // rounding can leave a tiny negative value near q == theta
    d.max(0.0)
}

/// Binary entropy `h2(u)` in nats.
pub fn binary_entropy(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return f64::NAN;
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.ln() };
    term(u) + term(1.0 - u)
}

/// Variances of two zero-mean Gaussian priors: `sigma2_p` under the true
/// model `P` and `sigma2_q` under the reference `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPriorPair {
    sigma2_p: f64,
    sigma2_q: f64,
}

impl GaussianPriorPair {
    pub fn new(sigma2_p: f64, sigma2_q: f64) -> Result<Self> {
        require_positive("sigma2_p", sigma2_p)?;
        require_positive("sigma2_q", sigma2_q)?;
        Ok(Self { sigma2_p, sigma2_q })
    }

    pub fn sigma2_p(&self) -> f64 {
        self.sigma2_p
    }

    pub fn sigma2_q(&self) -> f64 {
        self.sigma2_q
    }
}

/// `D[N(0, sigma2_q) || N(0, sigma2_p)]`.
pub fn gaussian_kl(pair: GaussianPriorPair) -> f64 {
    let r = pair.sigma2_q / pair.sigma2_p;
    (0.5 * (r - r.ln() - 1.0)).max(0.0)
}

/// Divergence between the measures of `x1 + noise` and `x2 + noise` for
/// white noise of two-sided density `n0 / 2`: `∫ (x1 - x2)^2 dt / n0`.
pub fn path_divergence(x1: &GridFunction, x2: &GridFunction, n0: f64) -> Result<f64> {
    require_positive("n0", n0)?;
    x1.check_same_grid(x2)?;
    let diff: Vec<f64> = x1
        .values()
        .iter()
        .zip(x2.values())
        .map(|(a, b)| a - b)
        .collect();
    let d = GridFunction::new(*x1.grid(), diff)?;
    Ok(d.energy() / n0)
}

/// Coefficients of `E_P exp{A Theta^2 - B Theta}` with `Theta ~ N(0, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMgfCoeffs {
    pub a_coef: f64,
    pub b_coef: f64,
    pub sigma2: f64,
}

impl QuadMgfCoeffs {
    pub fn new(a_coef: f64, b_coef: f64, sigma2: f64) -> Result<Self> {
        require_positive("sigma2", sigma2)?;
        if !(a_coef.is_finite() && b_coef.is_finite()) {
            return Err(domain("MGF coefficients must be finite"));
        }
        Ok(Self {
            a_coef,
            b_coef,
            sigma2,
        })
    }

    /// `1 - 2 A sigma2`; the expectation is finite iff this is positive.
    pub fn margin(&self) -> f64 {
        1.0 - 2.0 * self.a_coef * self.sigma2
    }

    pub fn diverges(&self) -> bool {
        self.margin() <= 0.0
    }
}

/// `E exp{A Theta^2 - B Theta}` for `Theta ~ N(0, sigma2)`, `+inf` when
/// `1 - 2 A sigma2 <= 0`.
pub fn gaussian_quad_mgf(c: QuadMgfCoeffs) -> f64 {
    log_gaussian_quad_mgf(c).exp()
}

/// Natural log of [`gaussian_quad_mgf`].
pub fn log_gaussian_quad_mgf(c: QuadMgfCoeffs) -> f64 {
    let m = c.margin();
    if m <= 0.0 {
        return f64::INFINITY;
    }
    c.b_coef * c.b_coef * c.sigma2 / (2.0 * m) - 0.5 * m.ln()
}

/// A Rényi order `a > 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a > 1.0 {
            Ok(Self(a))
        } else {
            Err(domain(format!("Rényi order must be > 1, got {a}")))
        }
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// True model `Theta ~ N(0, sigma2)`, `y = x(t, Theta) + n(t)` with constant
/// signal energy `ex` and constant DC integral `q_const`; reference model
/// `Theta ~ N(0, sigma2_q)`, `y = Theta s(t) + n(t)` with DC signal `s` of
/// energy `es` over `[0, t_horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiGaussianParams {
    pub sigma2: f64,
    pub sigma2_q: f64,
    pub es: f64,
    pub ex: f64,
    pub n0: f64,
    pub q_const: f64,
    pub t_horizon: f64,
}

impl RenyiGaussianParams {
    /// Reference and true priors equal, no reference signal, `q = 0`.
    pub fn same_prior(sigma2: f64, ex: f64, n0: f64) -> Self {
        Self {
            sigma2,
            sigma2_q: sigma2,
            es: 0.0,
            ex,
            n0,
            q_const: 0.0,
            t_horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("sigma2", self.sigma2)?;
        require_positive("sigma2_q", self.sigma2_q)?;
        require_positive("n0", self.n0)?;
        require_positive("t_horizon", self.t_horizon)?;
        require_nonnegative("es", self.es)?;
        require_nonnegative("ex", self.ex)?;
        if !self.q_const.is_finite() {
            return Err(domain("q_const must be finite"));
        }
        Ok(())
    }

    /// Coefficients `A`, `B` of the Gaussian moment at order `a`.
    pub fn mgf_coeffs(&self, a: f64) -> QuadMgfCoeffs {
        let a_coef =
            a / (2.0 * self.sigma2) - a / (2.0 * self.sigma2_q) + a * (a - 1.0) * self.es / self.n0;
        let b_coef =
            2.0 * a * (a - 1.0) * self.q_const / self.n0 * (self.es / self.t_horizon).sqrt();
        QuadMgfCoeffs {
            a_coef,
            b_coef,
            sigma2: self.sigma2,
        }
    }

    /// Reference critical factor `1 / (2 sigma2_q) + es / n0`.
    pub fn reference_alpha_c(&self) -> f64 {
        1.0 / (2.0 * self.sigma2_q) + self.es / self.n0
    }
}

/// `a D_a(Q || P) = (1 / (a - 1)) ln ∫ (dQ/dP)^a dP` for the model pair of
/// [`RenyiGaussianParams`]. This is the conventionally normalized Rényi
/// divergence of order `a`; it is `+inf` when the Gaussian moment diverges.
pub fn renyi_gaussian_linear(order: RenyiOrder, p: &RenyiGaussianParams) -> Result<f64> {
    p.validate()?;
    let a = order.get();
    let c = p.mgf_coeffs(a);
    let m = c.margin();
    if m <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let am1 = a - 1.0;
    let value = a / (2.0 * am1) * (p.sigma2 / p.sigma2_q).ln()
        + a * p.ex / p.n0
        + c.b_coef * c.b_coef * p.sigma2 / (2.0 * am1 * m)
        - m.ln() / (2.0 * am1);
    Ok(value.max(0.0))
}

/// KL limit of [`renyi_gaussian_linear`] as `a -> 1+`:
/// `D(Q || P) = KL(priors) + E_Q ∫ (x - Theta s)^2 dt / n0`.
pub fn kl_gaussian_linear(p: &RenyiGaussianParams) -> Result<f64> {
    p.validate()?;
    let prior = gaussian_kl(GaussianPriorPair::new(p.sigma2, p.sigma2_q)?);
    Ok(prior + (p.ex + p.sigma2_q * p.es) / p.n0)
}

/// Discrete KL divergence `D(q || p)`; `+inf` when `q` puts mass where `p` has none.
pub fn discrete_kl(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::Shape(format!("{} vs {} outcomes", q.len(), p.len())));
    }
    Ok(q.iter()
        .zip(p)
        .map(|(&qi, &pi)| xlogx_over(qi, pi))
        .sum::<f64>()
        .max(0.0))
}

/// The change-of-measure lower bound `E_Q Z - D(Q || P)` on `ln E_P e^Z`.
pub fn log_mgf_lower_bound(z: &[f64], p: &[f64], q: &[f64]) -> Result<f64> {
    if z.len() != q.len() {
        return Err(Error::Shape(format!(
            "{} values vs {} outcomes",
            z.len(),
            q.len()
        )));
    }
    let mean: f64 = z.iter().zip(q).map(|(zi, qi)| zi * qi).sum();
    Ok(mean - discrete_kl(q, p)?)
}

/// Largest edge-to-peak ratio for which a density counts as vanishing at
/// the ends of its support.
pub const BOUNDARY_VANISH_RATIO: f64 = 1e-6;

/// A tilted prior `Q_beta = P^beta / Z(beta)` with its log-normalizer,
/// the normalizer's derivative and its Fisher information.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedPrior {
    pub beta: f64,
    pub z_beta: f64,
    pub phi: f64,
    pub phi_prime: f64,
    pub fisher_info: f64,
    /// The normalized tilted density, when the base is grid-sampled.
    pub density: Option<GridFunction>,
}

impl TiltedPrior {
    /// `D(Q_beta || P) = (beta - 1) phi'(beta) - phi(beta)`.
    pub fn divergence(&self) -> f64 {
        ((self.beta - 1.0) * self.phi_prime - self.phi).max(0.0)
    }
}

/// A prior that can be tilted.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    /// `N(0, sigma2)`, tilted analytically.
    Gaussian { sigma2: f64 },
    /// A normalized density sampled on a grid.
    Grid(GridFunction),
}

impl Prior {
    pub fn gaussian(sigma2: f64) -> Result<Self> {
        require_positive("sigma2", sigma2)?;
        Ok(Prior::Gaussian { sigma2 })
    }

    pub fn grid(density: GridFunction) -> Result<Self> {
        check_density(&density)?;
        Ok(Prior::Grid(density))
    }

    pub fn tilt(&self, beta: f64) -> Result<TiltedPrior> {
        match self {
            Prior::Gaussian { sigma2 } => tilt_gaussian(*sigma2, beta),
            Prior::Grid(p) => tilt_prior(p, beta),
        }
    }

    /// Whether `Q_beta` vanishes at the ends of its support, a precondition
    /// of the Bayesian Cramér-Rao bound. Analytic priors always qualify.
    pub fn vanishes_at_boundary(&self, beta: f64) -> Result<bool> {
        match self {
            Prior::Gaussian { .. } => Ok(true),
            Prior::Grid(p) => {
                let t = tilt_prior(p, beta)?;
                Ok(t.density.as_ref().map(vanishes_at_edges).unwrap_or(true))
            }
        }
    }
}

/// Whether the first and last samples are negligible relative to the peak.
pub fn vanishes_at_edges(density: &GridFunction) -> bool {
    let v = density.values();
    let peak = v.iter().cloned().fold(0.0, f64::max);
    peak > 0.0
        && v[0] <= BOUNDARY_VANISH_RATIO * peak
        && v[v.len() - 1] <= BOUNDARY_VANISH_RATIO * peak
}

fn check_density(p: &GridFunction) -> Result<()> {
    if p.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(domain("density samples must be finite and nonnegative"));
    }
    let z = p.integral();
    if (z - 1.0).abs() > 1e-6 {
        return Err(domain(format!("density integrates to {z}, expected 1")));
    }
    Ok(())
}

fn tilt_gaussian(sigma2: f64, beta: f64) -> Result<TiltedPrior> {
    require_positive("beta", beta)?;
    let l = (2.0 * PI * sigma2).ln();
    let phi = 0.5 * (1.0 - beta) * l - 0.5 * beta.ln();
    Ok(TiltedPrior {
        beta,
        z_beta: phi.exp(),
        phi,
        phi_prime: -0.5 * l - 0.5 / beta,
        fisher_info: beta / sigma2,
        density: None,
    })
}

fn log_normalizer(p: &GridFunction, beta: f64) -> Result<f64> {
    let z = p.map(|v| v.powf(beta)).integral();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Divergence(format!(
            "Z({beta}) = {z} is not a positive finite number"
        )));
    }
    Ok(z.ln())
}

/// Tilts a grid-sampled prior by `beta > 0`.
///
/// `phi'` is a centered finite difference in `beta`; the Fisher information
/// is `4 ∫ (d sqrt(Q)/d theta)^2`, which equals `∫ Q'^2 / Q` and stays
/// finite where `Q` touches zero at the ends of the support. A density that
/// vanishes at an interior point is rejected.
pub fn tilt_prior(base: &GridFunction, beta: f64) -> Result<TiltedPrior> {
    tilt_prior_with(base, beta, None)
}

/// [`tilt_prior`] with an optional analytic `phi'(beta)`.
pub fn tilt_prior_with(
    base: &GridFunction,
    beta: f64,
    phi_prime: Option<f64>,
) -> Result<TiltedPrior> {
    require_positive("beta", beta)?;
    check_density(base)?;
    check_no_interior_zero(base)?;
    let phi = log_normalizer(base, beta)?;
    let phi_prime = match phi_prime {
        Some(d) => d,
        None => {
            let h = (1e-5 * beta.max(1.0)).min(0.5 * beta);
            (log_normalizer(base, beta + h)? - log_normalizer(base, beta - h)?) / (2.0 * h)
        }
    };
    let z = phi.exp();
    let density = base.map(|v| v.powf(beta) / z);
    let root = density.map(f64::sqrt).derivative();
    let fisher_info = 4.0 * root.energy();
    Ok(TiltedPrior {
        beta,
        z_beta: z,
        phi,
        phi_prime,
        fisher_info,
        density: Some(density),
    })
}

fn check_no_interior_zero(p: &GridFunction) -> Result<()> {
    let v = p.values();
    let first = v.iter().position(|&x| x > 0.0);
    let last = v.iter().rposition(|&x| x > 0.0);
    if let (Some(f), Some(l)) = (first, last) {
        if let Some(k) = (f..=l).find(|&i| v[i] <= 0.0) {
            let theta = p.grid().point(k);
            return Err(domain(format!(
                "density vanishes at interior point theta = {theta}; Fisher information undefined"
            )));
        }
    }
    Ok(())
}
