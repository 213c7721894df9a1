//! `--config FILE` support: `key = value` lines merged under explicit flags.

use std::fs;

use crate::CliError;

/// Keys that are switches rather than valued options.
const SWITCHES: &[&str] = &["log"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_given(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| a == &long || a.starts_with(&eq))
}

/// Result of merging a config file into the argument list.
#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub args: Vec<String>,
    /// The effective `key=value` settings for the echo line, in file order.
    pub effective: Vec<(String, String)>,
}

/// Finds `--config FILE` in `args`, removes it, and appends every config key
/// not already given as a flag. Returns `None` when no config was named.
pub fn merge_config(args: &[String]) -> Result<Option<Merged>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| CliError::Usage("--config needs a file".into()))?
                    .clone(),
            );
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a.clone());
        }
    }
    let Some(path) = path else {
        return Ok(None);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let mut effective = Vec::new();
    let mut extra = Vec::new();
    for (k, v) in parse_config(&text)? {
        if flag_given(&rest, &k) {
            let given = explicit_value(&rest, &k).unwrap_or_else(|| "true".into());
            effective.push((k, given));
            continue;
        }
        if SWITCHES.contains(&k.as_str()) {
            if v == "true" {
                extra.push(format!("--{k}"));
            }
        } else {
            extra.push(format!("--{k}={v}"));
        }
        effective.push((k, v));
    }
    rest.extend(extra);
    Ok(Some(Merged {
        args: rest,
        effective,
    }))
}

fn explicit_value(args: &[String], key: &str) -> Option<String> {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().enumerate().find_map(|(i, a)| {
        if let Some(v) = a.strip_prefix(&eq) {
            Some(v.to_string())
        } else if a == &long {
            args.get(i + 1).filter(|n| !n.starts_with("--")).cloned()
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn flags_win_over_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        fs::write(&p, "# comment\nalpha = 0.3\nes = 2\nlog = true\n").unwrap();
        let args = s(&[
            "riskbound",
            "bound",
            "nonbayes-linear",
            "--alpha",
            "0.25",
            "--config",
            p.to_str().unwrap(),
        ]);
        let m = merge_config(&args).unwrap().unwrap();
        assert_eq!(
            m.args,
            s(&[
                "riskbound",
                "bound",
                "nonbayes-linear",
                "--alpha",
                "0.25",
                "--es=2",
                "--log"
            ])
        );
        assert_eq!(m.effective[0], ("alpha".to_string(), "0.25".to_string()));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_config("alpha 0.3").is_err());
        assert_eq!(parse_config("sigma2_q = 1").unwrap()[0].0, "sigma2-q");
    }
}
