//! Parameter values given on the command line: a number, a comma list, or a
//! `start:stop:steps` sweep.

use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    List(Vec<f64>),
    Sweep { start: f64, stop: f64, steps: usize },
}

impl Values {
    pub fn one(v: f64) -> Self {
        Values::List(vec![v])
    }

    /// The points, log-spaced when `log` is set.
    pub fn expand(&self, log: bool) -> Result<Vec<f64>, CliError> {
        match *self {
            Values::List(ref v) => Ok(v.clone()),
            Values::Sweep { start, stop, steps } => {
                if log && !(start > 0.0 && stop > 0.0) {
                    return Err(CliError::Usage(format!(
                        "log sweep {start}:{stop} needs positive ends"
                    )));
                }
                let n = (steps - 1) as f64;
                Ok((0..steps)
                    .map(|i| {
                        let u = i as f64 / n;
                        if i + 1 == steps {
                            stop
                        } else if log {
                            (start.ln() + u * (stop.ln() - start.ln())).exp()
                        } else {
                            start + u * (stop - start)
                        }
                    })
                    .collect())
            }
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("'{s}' is not a number"))
}

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(Values::List(
                s.split(',').map(number).collect::<Result<_, _>>()?,
            )),
            3 => {
                let steps: usize = parts[2]
                    .trim()
                    .parse()
                    .map_err(|_| format!("sweep steps '{}' is not a count", parts[2]))?;
                if steps < 2 {
                    return Err(format!("sweep '{s}' needs at least 2 steps"));
                }
                Ok(Values::Sweep {
                    start: number(parts[0])?,
                    stop: number(parts[1])?,
                    steps,
                })
            }
            _ => Err(format!(
                "'{s}' is neither a number, a comma list nor start:stop:steps"
            )),
        }
    }
}

/// Named parameter columns whose cartesian product gives the rows; earlier
/// parameters vary slowest.
#[derive(Debug, Default)]
pub struct Params {
    names: Vec<&'static str>,
    values: Vec<Vec<f64>>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(mut self, name: &'static str, values: &Values, log: bool) -> Result<Self, CliError> {
        self.names.push(name);
        self.values.push(values.expand(log)?);
        Ok(self)
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn rows(&self) -> Vec<Row> {
        let mut rows = vec![Vec::new()];
        for vals in &self.values {
            rows = rows
                .into_iter()
                .flat_map(|r| {
                    vals.iter().map(move |v| {
                        let mut r = r.clone();
                        r.push(*v);
                        r
                    })
                })
                .collect();
        }
        rows.into_iter()
            .map(|values| Row {
                names: self.names.clone(),
                values,
            })
            .collect()
    }
}

/// One point of the parameter product.
#[derive(Debug, Clone)]
pub struct Row {
    names: Vec<&'static str>,
    values: Vec<f64>,
}

impl Row {
    pub fn get(&self, name: &str) -> f64 {
        let i = self
            .names
            .iter()
            .position(|n| *n == name)
            .expect("declared parameter");
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
