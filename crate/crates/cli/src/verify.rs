//! `riskbound verify <cmd>`.

use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use riskbound::bayes::LinearGaussianModel;
use riskbound::verify::{
    bernoulli_exact_lambda, certify_default, empirical_exponent, mc_lambda, BernoulliExact,
    McEstimator, McModel, McRun,
};

use crate::table::{Cell, Table};
use crate::values::Values;
use crate::{CliError, Output};

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Monte Carlo estimate of ln E exp{alpha err^2}, one row per seed.
    /// Columns: model,estimator,alpha,n,seed,lambda_hat,se,max_share,heavy_tail,exact
    Mc(McArgs),
    /// Exact finite-n Bernoulli cost by a log-space binomial sum.
    /// Columns: estimator,n,a,theta,lambda,lambda_per_n,exponent
    BernoulliExact(BernoulliArgs),
    /// Bound-versus-truth battery; exits with status 4 on any violation.
    /// Columns: family,alpha,bound,truth,se,passed
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelId {
    LinGauss,
    Phase,
    NonbayesLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorId {
    CondMean,
    Zero,
    Ml,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, value_enum)]
    model: ModelId,
    #[arg(long, value_enum)]
    estimator: EstimatorId,
    /// Risk factor as a fraction of the model's divergence threshold.
    #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
    alpha_frac: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    es: f64,
    #[arg(long, default_value_t = 1.0)]
    n0: f64,
    /// True parameter for the non-Bayesian model.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Master seed, or a list / sweep of seeds.
    #[arg(long, default_value = "0")]
    seed: Values,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BernoulliEstimator {
    /// theta_hat = k / n.
    Empirical,
    /// The asymptotically optimal Bayesian estimator for the same a.
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct BernoulliArgs {
    #[arg(long, required = true)]
    n: Values,
    #[arg(long, alias = "a-sweep", required = true)]
    a: Values,
    #[arg(long, required = true)]
    theta: Values,
    #[arg(long, value_enum, default_value = "empirical")]
    estimator: BernoulliEstimator,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Battery to run.
    #[arg(long, default_value = "default", value_parser = ["default"])]
    suite: String,
}

fn count(name: &str, x: f64) -> Result<u64, CliError> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(CliError::Usage(format!(
            "--{name} must be a nonnegative integer, got {x}"
        )))
    }
}

fn model(args: &McArgs) -> Result<McModel, CliError> {
    Ok(match args.model {
        ModelId::LinGauss => {
            McModel::LinearGaussian(LinearGaussianModel::new(args.sigma2, args.es, args.n0)?)
        }
        ModelId::Phase => McModel::Phase {
            sigma2: args.sigma2,
        },
        ModelId::NonbayesLinear => McModel::ScalarNonBayes {
            theta: args.theta,
            es: args.es,
            n0: args.n0,
        },
    })
}

fn run_mc(args: &McArgs, log: bool) -> Result<Table, CliError> {
    let model = model(args)?;
    let est = match args.estimator {
        EstimatorId::CondMean => McEstimator::CondMean,
        EstimatorId::Zero => McEstimator::Zero,
        EstimatorId::Ml => McEstimator::Ml,
    };
    let alpha = match (args.alpha, args.alpha_frac) {
        (Some(a), _) => a,
        (None, Some(f)) => {
            // a tiny probe run exposes the threshold without risking a refusal
            let probe = McRun::new(model, est, f64::MIN_POSITIVE, args.samples, 0)?;
            f * probe.threshold()
        }
        (None, None) => unreachable!("clap requires one of --alpha, --alpha-frac"),
    };
    let seeds = args
        .seed
        .expand(log)?
        .into_iter()
        .map(|s| count("seed", s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new([
        "model",
        "estimator",
        "alpha",
        "n",
        "seed",
        "lambda_hat",
        "se",
        "max_share",
        "heavy_tail",
        "exact",
    ]);
    for seed in seeds {
        let run = McRun::new(model, est, alpha, args.samples, seed)?;
        let r = mc_lambda(&run)?;
        t.push(vec![
            model.id().into(),
            est.id().into(),
            alpha.into(),
            (args.samples as f64).into(),
            Cell::Text(seed.to_string()),
            r.lambda_hat.into(),
            r.se.into(),
            r.max_share.into(),
            r.heavy_tail.into(),
            run.exact().into(),
        ]);
    }
    Ok(t)
}

fn run_bernoulli(args: &BernoulliArgs, log: bool) -> Result<Table, CliError> {
    let ns = args
        .n
        .expand(log)?
        .into_iter()
        .map(|n| count("n", n).map(|n| n as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let (as_, thetas) = (args.a.expand(log)?, args.theta.expand(log)?);
    let mut pts = Vec::new();
    for &n in &ns {
        for &a in &as_ {
            for &th in &thetas {
                pts.push((n, a, th));
            }
        }
    }
    let est = args.estimator;
    let rows: Vec<(usize, f64, f64, f64)> = pts
        .par_iter()
        .map(|&(n, a, th)| {
            let spec = match est {
                BernoulliEstimator::Empirical => BernoulliExact::empirical(n, a, th)?,
                BernoulliEstimator::Asymptotic => BernoulliExact::asymptotic(n, a, th)?,
            };
            Ok((n, a, th, bernoulli_exact_lambda(&spec)?))
        })
        .collect::<riskbound::Result<_>>()?;
    let name = match est {
        BernoulliEstimator::Empirical => "empirical",
        BernoulliEstimator::Asymptotic => "asymptotic",
    };
    let mut t = Table::new([
        "estimator",
        "n",
        "a",
        "theta",
        "lambda",
        "lambda_per_n",
        "exponent",
    ]);
    for (n, a, th, l) in rows {
        let exponent = match est {
            BernoulliEstimator::Empirical => Cell::Num(empirical_exponent(a, th)),
            BernoulliEstimator::Asymptotic => Cell::Empty,
        };
        t.push(vec![
            name.into(),
            (n as f64).into(),
            a.into(),
            th.into(),
            l.into(),
            (l / n as f64).into(),
            exponent,
        ]);
    }
    Ok(t)
}

fn run_certify() -> Result<Output, CliError> {
    let cases = certify_default()?;
    let mut t = Table::new(["family", "alpha", "bound", "truth", "se", "passed"]);
    for c in &cases {
        t.push(vec![
            c.family.as_str().into(),
            c.alpha.into(),
            c.bound.into(),
            c.truth.into(),
            c.se.into(),
            c.passed().into(),
        ]);
    }
    let bad = cases.iter().filter(|c| !c.passed()).count();
    let failure = if bad == 0 {
        eprintln!("certify: {} cases, all pass", cases.len());
        None
    } else {
        Some(CliError::Verification(format!(
            "certify: {bad} of {} cases violated",
            cases.len()
        )))
    };
    Ok(Output { table: t, failure })
}

pub fn run(cmd: &VerifyCmd, log: bool) -> Result<Output, CliError> {
    match cmd {
        VerifyCmd::Mc(args) => run_mc(args, log).map(Into::into),
        VerifyCmd::BernoulliExact(args) => run_bernoulli(args, log).map(Into::into),
        VerifyCmd::Certify(_) => run_certify(),
    }
}
