//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. Numbers accept plain decimals,
//! fractions (`1/128`) and powers of two (`2^-7`); lists are comma
//! separated.
//!
//! ```text
//! T = 1
//! dx = 1/128
//! dt_list = 2^-4, 2^-5, 2^-6, 2^-7, 2^-8, 2^-9
//! n_replicas = 2000
//! method = m1
//! linear = imp
//! master_seed = 2024
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, InitialCondition, TestFunction};
use crate::grid::Mesh;

/// Parsed configuration: the experiment plus command-specific extras.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    /// Thresholds for the `localize` command.
    pub localization_thresholds: Vec<f64>,
    /// Step used by `localize`; defaults to the last entry of `dt_list`.
    pub localize_dt: Option<f64>,
    /// Snapshot times for `simulate`.
    pub snapshot_times: Vec<f64>,
    /// Replica simulated by `simulate`.
    pub replica: u64,
    /// Randomised cases per suite for `lemmas`.
    pub lemma_cases: usize,
}

const KNOWN_KEYS: &[&str] = &[
    "T",
    "dx",
    "n_interior",
    "dt_list",
    "n_replicas",
    "method",
    "linear",
    "master_seed",
    "test_function",
    "localization_M",
    "localize_dt",
    "x0",
    "noise_scale",
    "threads",
    "snapshot_times",
    "replica",
    "lemma_cases",
];

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

/// Parses a number written as a decimal, `a/b`, or `b^e`.
pub fn parse_number(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let bad = || format!("'{t}' is not a number");
    if let Some((num, den)) = t.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| bad())?;
        let d: f64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(format!("'{t}' divides by zero"));
        }
        return Ok(n / d);
    }
    if let Some((base, exp)) = t.split_once('^') {
        let b: f64 = base.trim().parse().map_err(|_| bad())?;
        let e: i32 = exp.trim().parse().map_err(|_| bad())?;
        return Ok(b.powi(e));
    }
    t.parse().map_err(|_| bad())
}

fn parse_list(line: usize, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_number(s).map_err(|m| err(line, m)))
        .collect()
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        err(
            line,
            format!("{key} expects a non-negative integer, got '{value}'"),
        )
    })
}

fn parse_initial(line: usize, value: &str) -> Result<InitialCondition> {
    let v = value.to_ascii_lowercase();
    match v.as_str() {
        "zero" | "0" => Ok(InitialCondition::Zero),
        "two_phase" | "step" => Ok(InitialCondition::TwoPhase),
        _ => {
            let amp = v
                .strip_prefix("sine")
                .map(|rest| rest.trim_start_matches(':'));
            match amp {
                Some("") => Ok(InitialCondition::Sine { amplitude: 1.0 }),
                Some(a) => Ok(InitialCondition::Sine {
                    amplitude: parse_number(a).map_err(|m| err(line, m))?,
                }),
                None => Err(err(
                    line,
                    format!("x0 must be zero, sine[:amplitude] or two_phase, got '{value}'"),
                )),
            }
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key = value, got '{content}'")))?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(line, format!("{key} has no value")));
            }
            if let Some((first, _)) = entries.insert(key, (line, value)) {
                return Err(err(line, format!("{key} already set on line {first}")));
            }
        }

        let mut exp = ExperimentConfig::desk_scale();
        let mut cfg = RunConfig {
            experiment: exp.clone(),
            localization_thresholds: vec![3.0, 5.0, 8.0],
            localize_dt: None,
            snapshot_times: vec![],
            replica: 0,
            lemma_cases: 1_000_000,
        };
        if entries.contains_key("dx") && entries.contains_key("n_interior") {
            let line = entries["n_interior"].0;
            return Err(err(line, "set either dx or n_interior, not both"));
        }

        for (&key, &(line, value)) in &entries {
            let number = || parse_number(value).map_err(|m| err(line, m));
            match key {
                "T" => exp.horizon = number()?,
                "dx" => {
                    let dx = number()?;
                    let cells = (1.0 / dx).round();
                    if !(dx > 0.0) || (cells * dx - 1.0).abs() > 1e-9 || cells < 2.0 {
                        return Err(err(
                            line,
                            format!("1/dx must be an integer >= 2, got dx={dx}"),
                        ));
                    }
                    exp.mesh =
                        Mesh::with_cells(cells as usize).map_err(|e| err(line, e.to_string()))?;
                }
                "n_interior" => {
                    exp.mesh = Mesh::new(parse_int(line, key, value)?)
                        .map_err(|e| err(line, e.to_string()))?;
                }
                "dt_list" => exp.dt_list = parse_list(line, value)?,
                "n_replicas" => exp.n_replicas = parse_int(line, key, value)?,
                "method" => {
                    exp.method = value.parse().map_err(|e: Error| err(line, e.to_string()))?
                }
                "linear" => {
                    exp.linear = value.parse().map_err(|e: Error| err(line, e.to_string()))?
                }
                "master_seed" => exp.master_seed = parse_int(line, key, value)?,
                "test_function" => {
                    exp.test_function = match value.to_ascii_lowercase().as_str() {
                        "exp_neg_5_h2" => TestFunction::ExpNeg5H2,
                        other => match other.strip_prefix("constant:") {
                            Some(c) => {
                                TestFunction::Constant(parse_number(c).map_err(|m| err(line, m))?)
                            }
                            None => {
                                return Err(err(line, format!("unknown test function '{value}'")))
                            }
                        },
                    }
                }
                "localization_M" => {
                    let ms = parse_list(line, value)?;
                    if ms.iter().any(|m| !(*m > 0.0)) {
                        return Err(err(line, "localization thresholds must be positive"));
                    }
                    exp.localization_m = ms.first().copied();
                    cfg.localization_thresholds = ms;
                }
                "localize_dt" => cfg.localize_dt = Some(number()?),
                "x0" => exp.initial = parse_initial(line, value)?,
                "noise_scale" => exp.noise_scale = number()?,
                "threads" => exp.threads = parse_int(line, key, value)?,
                "snapshot_times" => cfg.snapshot_times = parse_list(line, value)?,
                "replica" => cfg.replica = parse_int(line, key, value)?,
                "lemma_cases" => cfg.lemma_cases = parse_int(line, key, value)?,
                _ => unreachable!("key list checked above"),
            }
        }
        exp.validate().map_err(|e| err(0, e.to_string()))?;
        cfg.experiment = exp;
        Ok(cfg)
    }

    /// Canonical rendering of every effective setting, one per line.
    /// `threads` is left out: it does not affect any output.
    pub fn canonical(&self) -> String {
        let e = &self.experiment;
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "T={:e}", e.horizon);
        let _ = writeln!(s, "n_interior={}", e.mesh.n_interior());
        let _ = writeln!(s, "dt_list={}", list(&e.dt_list));
        let _ = writeln!(s, "n_replicas={}", e.n_replicas);
        let _ = writeln!(s, "method={}", e.method);
        let _ = writeln!(s, "linear={}", e.linear);
        let _ = writeln!(s, "master_seed={}", e.master_seed);
        let _ = writeln!(s, "test_function={:?}", e.test_function);
        let _ = writeln!(s, "localization_M={}", list(&self.localization_thresholds));
        let _ = writeln!(s, "localize_dt={:?}", self.localize_dt);
        let _ = writeln!(s, "x0={:?}", e.initial);
        let _ = writeln!(s, "noise_scale={:e}", e.noise_scale);
        let _ = writeln!(s, "snapshot_times={}", list(&self.snapshot_times));
        let _ = writeln!(s, "replica={}", self.replica);
        let _ = writeln!(s, "lemma_cases={}", self.lemma_cases);
        s
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{LinearIntegrator, Method};

    #[test]
    fn numbers() {
        assert_eq!(parse_number("1/128").unwrap(), 1.0 / 128.0);
        assert_eq!(parse_number("2^-4").unwrap(), 0.0625);
        assert_eq!(parse_number(" 0.5 ").unwrap(), 0.5);
        assert!(parse_number("x").is_err());
        assert!(parse_number("1/0").is_err());
    }

    #[test]
    fn full_config() {
        let text = "# desk scale\nT = 1\ndx = 1/64  # comment\ndt_list = 2^-3, 2^-4, 2^-5\n\
                    n_replicas = 10\nmethod = m3\nlinear = expo\nmaster_seed = 7\n\
                    localization_M = 3,5,8\nx0 = sine:0.5\nthreads = 2\n";
        let c = RunConfig::parse(text).unwrap();
        let e = &c.experiment;
        assert_eq!(e.mesh.n_interior(), 63);
        assert_eq!(e.dt_list, vec![0.125, 0.0625, 0.03125]);
        assert_eq!(e.method, Method::M3);
        assert_eq!(e.linear, LinearIntegrator::Expo);
        assert_eq!(e.master_seed, 7);
        assert_eq!(c.localization_thresholds, vec![3.0, 5.0, 8.0]);
        assert_eq!(e.initial, InitialCondition::Sine { amplitude: 0.5 });
        assert_eq!(e.threads, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("T = 1\nbogus = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = RunConfig::parse("T = 1\n\nn_replicas\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e}");
        let e = RunConfig::parse("T = 1\nT = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = RunConfig::parse("dx = 0.3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }), "{e}");
        assert!(RunConfig::parse("dt_list = 0.25, 0.1, 0.05\n").is_err());
    }

    #[test]
    fn hash_ignores_threads_and_comments() {
        let a = RunConfig::parse("n_replicas = 10\nthreads = 1\n").unwrap();
        let b = RunConfig::parse("# x\nn_replicas = 10 # y\nthreads = 4\n").unwrap();
        let c = RunConfig::parse("n_replicas = 11\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
