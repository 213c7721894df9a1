//! `riskbound bound <kind>`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use riskbound::bayes::{
    linear_gaussian_min_lambda, linear_reference_bound, lpcb_optimize_beta,
    optimize_nonlinear_bound, phase_bound_large_sigma, tilted_prior_bound, ww_rect_delay_bound,
    ChainModel, LambdaMode, LinearGaussianModel, NonlinearBayesModel,
};
use riskbound::delay_design::{nu_bound, optimize_nu_bound, NuTradeoff};
use riskbound::divergences::Prior;
use riskbound::nonbayes::{
    nonlinear_bound, scalar_linear_bound, scalar_ml_lambda, vector_linear_bound, vector_ml_lambda,
    CorrelationProfile, ThetaRange, VectorLinearModel,
};
use riskbound::optimize::maximize_log_scan;
use riskbound::BoundValue;

use crate::table::{Cell, Table};
use crate::values::{Params, Row, Values};
use crate::CliError;

/// Tilt search range when `--beta` is not given.
const BETA_RANGE: (f64, f64) = (1e-3, 1e3);

#[derive(Debug, Subcommand)]
pub enum BoundKind {
    /// Linear-Gaussian model with a linear-Gaussian reference.
    /// Columns: sigma2,es,n0,sigma2_q,es_q,alpha,bound,status,exact,alpha_c
    BayesLinear(BayesLinear),
    /// Phase modulation under a Gaussian prior, linear-Gaussian reference.
    /// Columns: sigma2,ex,n0,alpha,bound,status,sigma2_q,lambda,large_sigma
    BayesPhase(BayesPhase),
    /// Tilted-prior bound for a Gaussian prior.
    /// Columns: sigma2,es,n0,corr,alpha,beta,bound,status,fisher_info,divergence
    BayesTilted(BayesTilted),
    /// Delay estimation with a smoothed reference pulse.
    /// Columns: sigma2,ex,n0,omega0,alpha,nu,bound,status,beta
    BayesDelay(BayesDelay),
    /// Rectangular-pulse delay bound.
    /// Columns: gamma,tau,alpha,bound,status,tau_q
    BayesWw(BayesWw),
    /// Constant-energy model against a DC reference.
    /// Columns: sigma2,snr,n0,alpha,bound,status,beta
    BayesLpcb(BayesLpcb),
    /// Scalar linear model, unbiased estimators.
    /// Columns: es,n0,alpha,bound,status,alpha_c,ml
    NonbayesLinear(NonbayesLinear),
    /// Vector linear model with a Gram matrix from a CSV file.
    /// Columns: es,n0,scale,bound,status,condition,critical_scale,ml
    NonbayesVector(NonbayesVector),
    /// Nonlinear model with a built-in correlation profile.
    /// Columns: ex,n0,width,theta,mse_floor,alpha,bound,status,theta_q
    NonbayesNonlinear(NonbayesNonlinear),
}

/// Marks a parameter the evaluator chooses itself.
fn unset() -> Values {
    Values::one(f64::NAN)
}

#[derive(Debug, Args)]
pub struct BayesLinear {
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    sigma2: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    es: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    /// Reference prior variance (default: sigma2).
    #[arg(long, allow_hyphen_values = true)]
    sigma2_q: Option<Values>,
    /// Reference signal energy (default: es).
    #[arg(long, allow_hyphen_values = true)]
    es_q: Option<Values>,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LambdaChoice {
    Optimize,
    Closed,
}

#[derive(Debug, Args)]
pub struct BayesPhase {
    #[arg(long, allow_hyphen_values = true, default_value = "0.5")]
    sigma2: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    ex: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
    /// Carrier frequency; omega times the unit horizon must be a multiple of pi.
    #[arg(long, default_value_t = 8.0 * PI)]
    omega: f64,
    /// Time samples over the unit horizon.
    #[arg(long, default_value_t = 1025)]
    t_points: usize,
    /// How the reference signal-to-noise ratio is chosen.
    #[arg(long, value_enum, default_value = "optimize")]
    lambda: LambdaChoice,
}

#[derive(Debug, Args)]
pub struct BayesTilted {
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    sigma2: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    es: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    /// Signal-path divergence charged on top of the prior divergence.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    corr: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
    /// Fixed tilt (default: maximize over [1e-3, 1e3]).
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<Values>,
}

#[derive(Debug, Args)]
pub struct BayesDelay {
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    sigma2: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    ex: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    /// Pulse frequency (default 2 pi).
    #[arg(long, allow_hyphen_values = true, default_value = "6.283185307179586")]
    omega0: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
    /// Fixed smoothing weight in [0, 1] (default: maximize jointly with the tilt).
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<Values>,
}

#[derive(Debug, Args)]
pub struct BayesWw {
    /// E_x / N0.
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    gamma: Values,
    /// Pulse width.
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    tau: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
}

#[derive(Debug, Args)]
pub struct BayesLpcb {
    #[arg(long, allow_hyphen_values = true, default_value = "0.5")]
    sigma2: Values,
    /// E_x / N0 of the true model.
    #[arg(long, alias = "snr-sweep", allow_hyphen_values = true, required = true)]
    snr: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
}

#[derive(Debug, Args)]
pub struct NonbayesLinear {
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    es: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
}

#[derive(Debug, Args)]
pub struct NonbayesVector {
    /// Dense row-major Gram matrix, one row per line, comma separated.
    #[arg(long, value_name = "FILE")]
    gamma: PathBuf,
    /// Direction of the risk vector (default: all ones).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    es: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    /// Risk vector = scale x direction.
    #[arg(
        long,
        alias = "scale-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    scale: Values,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// rho = exp(-(theta - theta~)^2 / (2 width^2)) on the real line.
    Gaussian,
    /// rho = cos((theta - theta~) / width) on [-pi width, pi width].
    Cosine,
}

#[derive(Debug, Args)]
pub struct NonbayesNonlinear {
    #[arg(long, value_enum, default_value = "gaussian")]
    profile: Profile,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    ex: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    n0: Values,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    width: Values,
    /// True parameter value.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    theta: Values,
    /// Mean-square error floor of the reference model, constant in theta~.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    mse_floor: Values,
    #[arg(
        long,
        alias = "alpha-sweep",
        allow_hyphen_values = true,
        required = true
    )]
    alpha: Values,
}

/// Evaluates `eval` on every row in parallel and lays out
/// `params..., bound, status, args...` in row order. A parameter left unset
/// (NaN) is filled from the bound's argmax of the same name.
fn tabulate(
    params: Params,
    args: &[&str],
    eval: impl Fn(&Row) -> riskbound::Result<BoundValue> + Sync,
) -> Result<Table, CliError> {
    let rows = params.rows();
    let bounds: Vec<BoundValue> = rows
        .par_iter()
        .map(&eval)
        .collect::<riskbound::Result<_>>()?;
    let mut t = Table::new(
        params
            .names()
            .iter()
            .copied()
            .chain(["bound", "status"])
            .chain(args.iter().copied()),
    );
    for (r, b) in rows.iter().zip(&bounds) {
        let mut cells: Vec<Cell> = params
            .names()
            .iter()
            .zip(r.values())
            .map(|(n, &x)| {
                if x.is_nan() {
                    Cell::opt(b.arg(n))
                } else {
                    x.into()
                }
            })
            .collect();
        cells.push(b.value.into());
        cells.push(b.status.as_str().into());
        cells.extend(args.iter().map(|a| Cell::opt(b.arg(a))));
        t.push(cells);
    }
    Ok(t)
}

/// Maximizes `f(beta)` over the default tilt range and re-evaluates there.
fn best_beta(f: impl Fn(f64) -> riskbound::Result<BoundValue>) -> riskbound::Result<BoundValue> {
    let m = maximize_log_scan(
        |b| f(b).map(|x| x.value).unwrap_or(f64::NAN),
        BETA_RANGE.0,
        BETA_RANGE.1,
        121,
        1e-10,
    );
    if !m.x.is_finite() || m.value.is_nan() || m.value == f64::NEG_INFINITY {
        return Err(riskbound::Error::Regularity(
            "no admissible tilt in [1e-3, 1e3]".into(),
        ));
    }
    Ok(f(m.x)?.with_evaluations(m.evaluations))
}

fn read_gamma(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("{}: '{s}' is not a number", path.display()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let k = rows.len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(CliError::Usage(format!(
            "{}: expected a square matrix",
            path.display()
        )));
    }
    Ok(DMatrix::from_row_iterator(k, k, rows.into_iter().flatten()))
}

pub fn run(kind: &BoundKind, log: bool) -> Result<Table, CliError> {
    match kind {
        BoundKind::BayesLinear(a) => {
            let p = Params::new()
                .add("sigma2", &a.sigma2, log)?
                .add("es", &a.es, log)?
                .add("n0", &a.n0, log)?
                .add("sigma2_q", a.sigma2_q.as_ref().unwrap_or(&unset()), log)?
                .add("es_q", a.es_q.as_ref().unwrap_or(&unset()), log)?
                .add("alpha", &a.alpha, log)?;
            tabulate(p, &["exact", "alpha_c"], |r| {
                let truth = LinearGaussianModel::new(r.get("sigma2"), r.get("es"), r.get("n0"))?;
                let pick = |x: f64, d: f64| if x.is_nan() { d } else { x };
                let reference = LinearGaussianModel::new(
                    pick(r.get("sigma2_q"), truth.sigma2),
                    pick(r.get("es_q"), truth.es),
                    truth.n0,
                )?;
                let alpha = r.get("alpha");
                let exact = linear_gaussian_min_lambda(&truth, alpha)?;
                Ok(linear_reference_bound(&truth, &reference, alpha)?
                    .with_arg("exact", exact.value)
                    .with_arg("alpha_c", truth.alpha_c()))
            })
        }
        BoundKind::BayesPhase(a) => {
            let p = Params::new()
                .add("sigma2", &a.sigma2, log)?
                .add("ex", &a.ex, log)?
                .add("n0", &a.n0, log)?
                .add("alpha", &a.alpha, log)?;
            let mode = match a.lambda {
                LambdaChoice::Optimize => LambdaMode::Optimize,
                LambdaChoice::Closed => LambdaMode::Closed,
            };
            tabulate(p, &["sigma2_q", "lambda", "large_sigma"], |r| {
                let (sigma2, ex, n0, alpha) =
                    (r.get("sigma2"), r.get("ex"), r.get("n0"), r.get("alpha"));
                let model = NonlinearBayesModel::phase(ex, n0, sigma2, 1.0, a.omega, a.t_points)?;
                let large = phase_bound_large_sigma(alpha, sigma2, ex / n0)?;
                Ok(optimize_nonlinear_bound(&model, alpha, mode)?
                    .with_arg("large_sigma", large.value))
            })
        }
        BoundKind::BayesTilted(a) => {
            let p = Params::new()
                .add("sigma2", &a.sigma2, log)?
                .add("es", &a.es, log)?
                .add("n0", &a.n0, log)?
                .add("corr", &a.corr, log)?
                .add("alpha", &a.alpha, log)?;
            let p = p.add("beta", a.beta.as_ref().unwrap_or(&unset()), log)?;
            tabulate(p, &["fisher_info", "divergence"], |r| {
                let prior = Prior::gaussian(r.get("sigma2"))?;
                let snr = r.get("es") / r.get("n0");
                let f = |beta: f64| {
                    tilted_prior_bound(&prior, r.get("alpha"), beta, snr, r.get("corr"))
                };
                match r.get("beta") {
                    b if b.is_nan() => best_beta(f),
                    b => f(b),
                }
            })
        }
        BoundKind::BayesDelay(a) => {
            let p = Params::new()
                .add("sigma2", &a.sigma2, log)?
                .add("ex", &a.ex, log)?
                .add("n0", &a.n0, log)?
                .add("omega0", &a.omega0, log)?
                .add("alpha", &a.alpha, log)?;
            let p = p.add("nu", a.nu.as_ref().unwrap_or(&unset()), log)?;
            tabulate(p, &["beta"], |r| {
                let prior = Prior::gaussian(r.get("sigma2"))?;
                let (ex, n0, omega0, alpha) =
                    (r.get("ex"), r.get("n0"), r.get("omega0"), r.get("alpha"));
                match r.get("nu") {
                    nu if nu.is_nan() => optimize_nu_bound(&prior, alpha, omega0, ex, n0),
                    nu => {
                        let t = NuTradeoff::new(nu, omega0, ex)?;
                        best_beta(|beta| nu_bound(&prior, alpha, beta, &t, n0))
                    }
                }
            })
        }
        BoundKind::BayesWw(a) => {
            let p = Params::new()
                .add("gamma", &a.gamma, log)?
                .add("tau", &a.tau, log)?
                .add("alpha", &a.alpha, log)?;
            tabulate(p, &["tau_q"], |r| {
                ww_rect_delay_bound(r.get("alpha"), r.get("gamma"), r.get("tau"))
            })
        }
        BoundKind::BayesLpcb(a) => {
            let p = Params::new()
                .add("sigma2", &a.sigma2, log)?
                .add("snr", &a.snr, log)?
                .add("n0", &a.n0, log)?
                .add("alpha", &a.alpha, log)?;
            tabulate(p, &["beta"], |r| {
                let (sigma2, n0) = (r.get("sigma2"), r.get("n0"));
                let reference = LinearGaussianModel::new(sigma2, 0.0, n0)?;
                let truth = ChainModel::constant_energy(sigma2, r.get("snr") * n0, n0)?;
                lpcb_optimize_beta(r.get("alpha"), &reference, &truth)
            })
        }
        BoundKind::NonbayesLinear(a) => {
            let p = Params::new()
                .add("es", &a.es, log)?
                .add("n0", &a.n0, log)?
                .add("alpha", &a.alpha, log)?;
            tabulate(p, &["alpha_c", "ml"], |r| {
                let (es, n0, alpha) = (r.get("es"), r.get("n0"), r.get("alpha"));
                Ok(scalar_linear_bound(alpha, es, n0)?
                    .with_arg("ml", scalar_ml_lambda(alpha, es, n0)?))
            })
        }
        BoundKind::NonbayesVector(a) => {
            let gamma = read_gamma(&a.gamma)?;
            let k = gamma.nrows();
            let dir = match &a.direction {
                Some(d) if d.len() == k => DVector::from_vec(d.clone()),
                Some(d) => {
                    return Err(CliError::Usage(format!(
                        "--direction has {} entries, Gram matrix is {k}x{k}",
                        d.len()
                    )))
                }
                None => DVector::from_element(k, 1.0),
            };
            let p = Params::new()
                .add("es", &a.es, log)?
                .add("n0", &a.n0, log)?
                .add("scale", &a.scale, log)?;
            tabulate(p, &["condition", "critical_scale", "ml"], |r| {
                let model = VectorLinearModel::new(gamma.clone(), r.get("es"), r.get("n0"))?;
                let alpha = &dir * r.get("scale");
                Ok(vector_linear_bound(&model, &alpha)?
                    .with_arg("critical_scale", model.critical_radius(&dir)?)
                    .with_arg("ml", vector_ml_lambda(&model, &alpha)?))
            })
        }
        BoundKind::NonbayesNonlinear(a) => {
            let p = Params::new()
                .add("ex", &a.ex, log)?
                .add("n0", &a.n0, log)?
                .add("width", &a.width, log)?
                .add("theta", &a.theta, log)?
                .add("mse_floor", &a.mse_floor, log)?
                .add("alpha", &a.alpha, log)?;
            let profile = a.profile;
            tabulate(p, &["theta_q"], |r| {
                let w = r.get("width");
                if !(w > 0.0 && w.is_finite()) {
                    return Err(riskbound::Error::Domain(format!(
                        "width must be positive, got {w}"
                    )));
                }
                let prof = match profile {
                    Profile::Gaussian => CorrelationProfile::from_fn(
                        move |x, y| (-(x - y) * (x - y) / (2.0 * w * w)).exp(),
                        r.get("ex"),
                        ThetaRange::Unbounded,
                    )?,
                    Profile::Cosine => CorrelationProfile::from_fn(
                        move |x, y| ((x - y) / w).cos(),
                        r.get("ex"),
                        ThetaRange::Bounded {
                            lo: -PI * w,
                            hi: PI * w,
                        },
                    )?,
                };
                let floor = r.get("mse_floor");
                nonlinear_bound(
                    &prof,
                    r.get("alpha"),
                    r.get("theta"),
                    |_| floor,
                    r.get("n0"),
                )
            })
        }
    }
}
