//! `riskbound emit-plot`: gnuplot scripts that read a CSV written by this tool.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use riskbound::phase::Phase;

use crate::table::fmt_num;
use crate::CliError;

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV produced by `riskbound bound|phase|verify`.
    #[arg(long, value_name = "CSV")]
    input: PathBuf,
    /// Values above this (including `inf`) are drawn at the ceiling.
    #[arg(long, default_value_t = 10.0)]
    ceiling: f64,
}

const COLORS: [&str; 3] = ["red", "blue", "green"];

const PHASES: [Phase; 5] = [
    Phase::Paramagnetic,
    Phase::PositiveMLowA,
    Phase::PositiveMHighA,
    Phase::NegativeMLowA,
    Phase::NegativeMHighA,
];

/// The recognized layouts.
#[derive(Debug, Clone, PartialEq)]
enum Schema {
    /// One bound curve per SNR, coloured in order of appearance.
    Lpcb {
        snr: Vec<String>,
    },
    Exponent,
    Estimator,
    Diagram,
    /// Any `bound` table with an `alpha` column.
    BoundVsAlpha,
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    /// 1-based column index for gnuplot.
    fn col(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .expect("schema column")
            + 1
    }

    fn has(&self, names: &[&str]) -> bool {
        names.iter().all(|n| self.header.iter().any(|h| h == n))
    }
}

fn detect(csv: &Csv) -> Result<Schema, CliError> {
    let h: Vec<&str> = csv.header.iter().map(String::as_str).collect();
    if h == ["sigma2", "snr", "n0", "alpha", "bound", "status", "beta"] {
        let i = csv.col("snr") - 1;
        let mut snr: Vec<String> = Vec::new();
        for r in &csv.rows {
            if !snr.contains(&r[i]) {
                snr.push(r[i].clone());
            }
        }
        return Ok(Schema::Lpcb { snr });
    }
    match h.as_slice() {
        ["a", "exponent", "q_star", "theta_hat_min", "theta_hat_max"] => Ok(Schema::Exponent),
        ["a", "q", "theta_hat", "minimax"] => Ok(Schema::Estimator),
        ["mu", "a", "label", "boundary", "multicritical", "dominant_m"] => Ok(Schema::Diagram),
        _ if csv.has(&["alpha", "bound", "status"]) => Ok(Schema::BoundVsAlpha),
        _ => Err(CliError::Usage(format!(
            "unknown CSV schema: {}",
            csv.header.join(",")
        ))),
    }
}

/// gnuplot expression for column `c` clipped at `ceil`, with `inf` mapped to it.
fn clipped(c: usize, ceil: &str) -> String {
    format!("(strcol({c}) eq \"inf\" ? {ceil} : ((${c}) > {ceil} ? {ceil} : ${c}))")
}

fn script(csv: &Csv, schema: &Schema, data: &str, ceiling: f64) -> String {
    let ceil = fmt_num(ceiling);
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set datafile commentschars \"#\"");
    let _ = writeln!(s, "set key top left");
    let _ = writeln!(s, "data = \"{data}\"");
    match schema {
        Schema::Lpcb { snr } => {
            let (a, b, sc) = (csv.col("alpha"), csv.col("bound"), csv.col("snr"));
            let _ = writeln!(s, "set xlabel \"alpha\"");
            let _ = writeln!(s, "set ylabel \"lower bound (nats)\"");
            let _ = writeln!(s, "set yrange [*:{ceil}]");
            let curves: Vec<String> = snr
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let color = COLORS[i % COLORS.len()];
                    format!(
                        "data using {a}:(strcol({sc}) eq \"{v}\" ? {} : NaN) with lines lc rgb \"{color}\" title \"SNR = {v}\"",
                        clipped(b, &ceil)
                    )
                })
                .collect();
            let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
        }
        Schema::Exponent => {
            let _ = writeln!(s, "set xlabel \"a\"");
            let _ = writeln!(s, "set ylabel \"E(a)\"");
            let _ = writeln!(
                s,
                "plot data using {}:{} with lines title \"E(a)\"",
                csv.col("a"),
                csv.col("exponent")
            );
        }
        Schema::Estimator => {
            let _ = writeln!(s, "set xlabel \"q\"");
            let _ = writeln!(s, "set ylabel \"estimate\"");
            let _ = writeln!(
                s,
                "plot data using {}:{} with lines title \"optimal estimate\", x with lines dt 2 title \"q\"",
                csv.col("q"),
                csv.col("theta_hat")
            );
        }
        Schema::Diagram => {
            let (m, a, l) = (csv.col("mu"), csv.col("a"), csv.col("label"));
            let _ = writeln!(s, "set xlabel \"mu\"");
            let _ = writeln!(s, "set ylabel \"a\"");
            let _ = writeln!(s, "set key outside right");
            let curves: Vec<String> = PHASES
                .iter()
                .map(|p| {
                    let name = p.as_str();
                    format!("data using (strcol({l}) eq \"{name}\" ? ${m} : NaN):{a} with points pt 5 ps 0.3 title \"{name}\"")
                })
                .collect();
            let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
        }
        Schema::BoundVsAlpha => {
            let _ = writeln!(s, "set xlabel \"alpha\"");
            let _ = writeln!(s, "set ylabel \"lower bound (nats)\"");
            let _ = writeln!(s, "set yrange [*:{ceil}]");
            let _ = writeln!(
                s,
                "plot data using {}:{} with lines title \"bound\"",
                csv.col("alpha"),
                clipped(csv.col("bound"), &ceil)
            );
        }
    }
    s
}

pub fn run(args: &PlotArgs, output: Option<&Path>) -> Result<(), CliError> {
    let csv = Csv::read(&args.input)?;
    let schema = detect(&csv)?;
    let text = script(
        &csv,
        &schema,
        &args.input.display().to_string(),
        args.ceiling,
    );
    match output {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Csv {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, text).unwrap();
        Csv::read(&p).unwrap()
    }

    #[test]
    fn lpcb_gets_one_colour_per_snr() {
        let c = csv("sigma2,snr,n0,alpha,bound,status,beta\n0.5,0.001,1,0.5,0.1,finite,0.2\n0.5,0.01,1,0.5,0.1,finite,0.2\n0.5,0.1,1,0.999,inf,divergent,0.2\n");
        let schema = detect(&c).unwrap();
        let s = script(&c, &schema, "fig1.csv", 10.0);
        for (col, snr) in COLORS.iter().zip(["0.001", "0.01", "0.1"]) {
            assert!(
                s.contains(&format!("lc rgb \"{col}\" title \"SNR = {snr}\"")),
                "{s}"
            );
        }
        assert!(!s.contains("0.999"));
    }

    #[test]
    fn unknown_schema_is_rejected() {
        assert!(detect(&csv("x,y\n1,2\n")).is_err());
        assert_eq!(
            detect(&csv("a,exponent,q_star,theta_hat_min,theta_hat_max\n")).unwrap(),
            Schema::Exponent
        );
    }
}
