//! `riskbound phase <cmd>`.

use clap::{Args, Subcommand};
use riskbound::phase::{
    bernoulli_bayes_exponent, magnetization_roots, phase_diagram, CurieWeissParams, ExponentProblem,
};

use crate::table::{Cell, Table};
use crate::values::Values;
use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum PhaseCmd {
    /// Bernoulli error exponent E(a).
    /// Columns: a,exponent,q_star,theta_hat_min,theta_hat_max
    Exponent(ExponentArgs),
    /// Asymptotically optimal estimator as a function of the empirical frequency.
    /// Columns: a,q,theta_hat,minimax
    Estimator(ExponentArgs),
    /// Fixed points of the Curie-Weiss mean-field equation.
    /// Columns: mu,a,m,stable,free_energy,dominant
    Roots(PlaneArgs),
    /// Phase labels over a (mu, a) lattice, mu varying slowest.
    /// Columns: mu,a,label,boundary,multicritical,dominant_m
    Diagram(PlaneArgs),
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    /// Normalized risk factor alpha / n.
    #[arg(long, alias = "a-sweep", allow_hyphen_values = true, required = true)]
    a: Values,
    /// Empirical-frequency grid points.
    #[arg(long, default_value_t = 201)]
    q_steps: usize,
    /// Estimate grid points.
    #[arg(long, default_value_t = 401)]
    t_steps: usize,
    /// Parameter grid points.
    #[arg(long, default_value_t = 401)]
    theta_steps: usize,
}

#[derive(Debug, Args)]
pub struct PlaneArgs {
    /// Prior bias mu in (-1, 1).
    #[arg(long, alias = "mu-sweep", allow_hyphen_values = true, required = true)]
    mu: Values,
    #[arg(long, alias = "a-sweep", allow_hyphen_values = true, required = true)]
    a: Values,
}

fn problems(args: &ExponentArgs, log: bool) -> Result<Vec<ExponentProblem>, CliError> {
    args.a
        .expand(log)?
        .into_iter()
        .map(|a| {
            ExponentProblem::with_grids(a, args.q_steps, args.t_steps, args.theta_steps)
                .map_err(Into::into)
        })
        .collect()
}

pub fn run(cmd: &PhaseCmd, log: bool) -> Result<Table, CliError> {
    match cmd {
        PhaseCmd::Exponent(args) => {
            let mut t = Table::new(["a", "exponent", "q_star", "theta_hat_min", "theta_hat_max"]);
            // each solve is parallel inside, so the sweep itself runs in order
            for p in problems(args, log)? {
                let c = bernoulli_bayes_exponent(&p);
                let (lo, hi) = c.estimator_range();
                t.push(vec![
                    c.a.into(),
                    c.exponent.into(),
                    c.q_star.into(),
                    lo.into(),
                    hi.into(),
                ]);
            }
            Ok(t)
        }
        PhaseCmd::Estimator(args) => {
            let mut t = Table::new(["a", "q", "theta_hat", "minimax"]);
            for p in problems(args, log)? {
                let c = bernoulli_bayes_exponent(&p);
                for i in 0..c.q.len() {
                    t.push(vec![
                        c.a.into(),
                        c.q[i].into(),
                        c.estimator[i].into(),
                        c.minimax[i].into(),
                    ]);
                }
            }
            Ok(t)
        }
        PhaseCmd::Roots(args) => {
            let mut t = Table::new(["mu", "a", "m", "stable", "free_energy", "dominant"]);
            for mu in args.mu.expand(log)? {
                for a in args.a.expand(log)? {
                    let mag = magnetization_roots(&CurieWeissParams::new(mu, a)?);
                    for (i, r) in mag.roots.iter().enumerate() {
                        t.push(vec![
                            mu.into(),
                            a.into(),
                            r.m.into(),
                            r.stable.into(),
                            r.free_energy.into(),
                            (i == mag.dominant).into(),
                        ]);
                    }
                }
            }
            Ok(t)
        }
        PhaseCmd::Diagram(args) => {
            let mus = args.mu.expand(log)?;
            let as_ = args.a.expand(log)?;
            let mut t = Table::new([
                "mu",
                "a",
                "label",
                "boundary",
                "multicritical",
                "dominant_m",
            ]);
            for r in phase_diagram(&mus, &as_)? {
                t.push(vec![
                    r.mu.into(),
                    r.a.into(),
                    Cell::from(r.label.phase.as_str()),
                    r.label.boundary.into(),
                    r.label.multicritical.into(),
                    r.label.dominant_m.into(),
                ]);
            }
            Ok(t)
        }
    }
}
