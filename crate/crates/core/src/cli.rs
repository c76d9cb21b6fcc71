//! Batch front-end behind the `acsplit` binary.
//!
//! Every command computes its outputs in memory first; the output
//! directory is only touched once the run has succeeded, so a bad config
//! never leaves partial files behind. CSV files are a pure function of the
//! configuration and seed. Timing goes to `summary.txt` only.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    localization_stats, strong_table, telescoped_totals, weak_table, ConvergenceTable,
    LocalizationStats,
};
use crate::grid::DiscreteOperator;
use crate::lemmas::{self, LemmaReport};
use crate::noise::NoisePlan;
use crate::schemes::{run_trajectory, TrajectoryOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Slope window enforced by `strong --check`.
pub const STRONG_SLOPE_RANGE: (f64, f64) = (0.35, 0.65);
/// Slope window enforced by `weak --check`.
pub const WEAK_SLOPE_RANGE: (f64, f64) = (0.3, 0.7);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lemmas,
    Simulate,
    Strong,
    Weak,
    Localize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lemmas => "lemmas",
            Command::Simulate => "simulate",
            Command::Strong => "strong",
            Command::Weak => "weak",
            Command::Localize => "localize",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub check: bool,
}

/// Files and console report produced by a command.
struct Outcome {
    files: Vec<(&'static str, String)>,
    report: String,
    checks_passed: bool,
}

/// Formats a number with 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn header(command: Command, cfg: &RunConfig) -> String {
    format!(
        "# acsplit {VERSION} command={} config_sha256={} seed={}\n",
        command.name(),
        cfg.hash(),
        cfg.experiment.master_seed
    )
}

/// Renders a convergence table in the `dt,estimate,stderr,n_valid,n_blowup`
/// schema, closed by the slope line.
pub fn table_csv(head: &str, table: &ConvergenceTable) -> String {
    let mut s = String::from(head);
    s.push_str("dt,estimate,stderr,n_valid,n_blowup\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(r.dt),
            num(r.estimate),
            num(r.stderr),
            r.n_valid,
            r.n_blowup
        );
    }
    let _ = writeln!(
        s,
        "# slope={} half_width={}",
        num(table.slope.unwrap_or(f64::NAN)),
        num(table.slope_half_width.unwrap_or(f64::NAN))
    );
    s
}

fn table_report(title: &str, table: &ConvergenceTable) -> String {
    let mut s = format!(
        "{title}\n{:>12} {:>14} {:>12} {:>8} {:>8}\n",
        "dt", "estimate", "stderr", "valid", "blowup"
    );
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{:>12.6e} {:>14.6e} {:>12.4e} {:>8} {:>8}{}",
            r.dt,
            r.estimate,
            r.stderr,
            r.n_valid,
            r.n_blowup,
            if r.is_valid() { "" } else { "  INVALID" }
        );
    }
    match (table.slope, table.slope_half_width) {
        (Some(a), Some(w)) => {
            let _ = writeln!(s, "slope = {a:.4} +/- {w:.4} (95%)");
        }
        _ => s.push_str("slope = unavailable (fewer than 3 usable rows)\n"),
    }
    s
}

fn slope_in(table: &ConvergenceTable, range: (f64, f64)) -> bool {
    table.all_valid() && table.slope.is_some_and(|s| s >= range.0 && s <= range.1)
}

fn run_lemmas(cfg: &RunConfig) -> Outcome {
    let reports: Vec<LemmaReport> = lemmas::run_all(cfg.lemma_cases, cfg.experiment.master_seed);
    let mut csv = header(Command::Lemmas, cfg);
    csv.push_str("lemma,cases,violations,worst_margin\n");
    let mut report = String::new();
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.name,
            r.cases,
            r.violations,
            num(r.worst_margin)
        );
        let _ = writeln!(
            report,
            "{:<10} {:<4} cases={} violations={} worst relative margin={:.3e}",
            r.name,
            if r.passed() { "PASS" } else { "FAIL" },
            r.cases,
            r.violations,
            r.worst_margin
        );
    }
    Outcome {
        files: vec![("lemmas.csv", csv)],
        report,
        checks_passed: reports.iter().all(LemmaReport::passed),
    }
}

fn run_strong(cfg: &RunConfig) -> Result<Outcome> {
    let table = strong_table(&cfg.experiment)?;
    let head = header(Command::Strong, cfg);
    let title = format!(
        "mean-square error E||X^dt - X^dt/2||^2 ({} / {})",
        cfg.experiment.method, cfg.experiment.linear
    );
    Ok(Outcome {
        files: vec![("strong.csv", table_csv(&head, &table))],
        report: table_report(&title, &table),
        checks_passed: slope_in(&table, STRONG_SLOPE_RANGE),
    })
}

fn run_weak(cfg: &RunConfig) -> Result<Outcome> {
    let table = weak_table(&cfg.experiment)?;
    let head = header(Command::Weak, cfg);
    let totals = telescoped_totals(&table);
    let mut tel = head.clone();
    tel.push_str("dt,estimate,stderr,levels\n");
    for t in &totals {
        let _ = writeln!(
            tel,
            "{},{},{},{}",
            num(t.dt),
            num(t.estimate),
            num(t.stderr),
            t.levels.len()
        );
    }
    let title = format!(
        "weak increments E[f(X^dt)] - E[f(X^dt/2)] ({} / {})",
        cfg.experiment.method, cfg.experiment.linear
    );
    Ok(Outcome {
        files: vec![
            ("weak.csv", table_csv(&head, &table)),
            ("weak_telescoped.csv", tel),
        ],
        report: table_report(&title, &table),
        checks_passed: slope_in(&table, WEAK_SLOPE_RANGE),
    })
}

fn localize_dt(cfg: &RunConfig) -> f64 {
    cfg.localize_dt
        .unwrap_or_else(|| *cfg.experiment.dt_list.last().expect("validated non-empty"))
}

/// Exceedance probabilities must not increase with the threshold.
pub fn localization_monotone(stats: &[LocalizationStats]) -> bool {
    let mut sorted: Vec<&LocalizationStats> = stats.iter().collect();
    sorted.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    sorted
        .windows(2)
        .all(|w| w[1].prob_exceed <= w[0].prob_exceed)
}

fn run_localize(cfg: &RunConfig) -> Result<Outcome> {
    let dt = localize_dt(cfg);
    let stats = localization_stats(&cfg.experiment, dt, &cfg.localization_thresholds)?;
    let mut csv = header(Command::Localize, cfg);
    let _ = writeln!(csv, "# dt={}", num(dt));
    csv.push_str("M,prob_exceed,prob_stderr,localized_mse,unlocalized_mse,n_replicas\n");
    let mut report = format!("localization at dt = {dt:e}\n");
    for s in &stats {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(s.threshold),
            num(s.prob_exceed),
            num(s.prob_stderr),
            num(s.localized_mse),
            num(s.unlocalized_mse),
            s.n_replicas
        );
        let _ = writeln!(
            report,
            "M = {:<6} P(sup|X|_E > M) = {:.5} +/- {:.5}  localized MSE = {:.6e}",
            s.threshold, s.prob_exceed, s.prob_stderr, s.localized_mse
        );
    }
    Ok(Outcome {
        files: vec![("localize.csv", csv)],
        report,
        checks_passed: localization_monotone(&stats),
    })
}

fn run_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let exp = &cfg.experiment;
    let dt = *exp.dt_list.last().expect("validated non-empty");
    let spec = exp.spec(dt)?;
    let op = DiscreteOperator::new(exp.mesh);
    let plan = NoisePlan::new(exp.master_seed, cfg.replica, exp.mesh, dt, 1)?;
    let x0 = exp.initial.build(exp.mesh);
    let snapshot_times = if cfg.snapshot_times.is_empty() {
        vec![0.0, exp.horizon]
    } else {
        cfg.snapshot_times.clone()
    };
    let options = TrajectoryOptions {
        noise_scale: exp.noise_scale,
        snapshot_times,
        ..TrajectoryOptions::new()
    };
    let stats = run_trajectory(&spec, &op, &x0, &plan, exp.horizon, &options)?;
    let mut csv = header(Command::Simulate, cfg);
    let _ = writeln!(
        csv,
        "# dt={} replica={} steps={} sup_norm_e={} sup_norm_h={} blown_up={}",
        num(dt),
        cfg.replica,
        stats.steps,
        num(stats.sup_norm_e),
        num(stats.sup_norm_h),
        stats.blown_up
    );
    csv.push_str("t,x,value\n");
    for (t, snap) in &stats.snapshots {
        for (x, v) in exp.mesh.nodes().zip(snap.values()) {
            let _ = writeln!(csv, "{},{},{}", num(*t), num(x), num(*v));
        }
    }
    let report = format!(
        "{} / {} with dt = {dt:e}: {} steps, sup|X|_E = {:.4}, sup||X||_H = {:.4}, ||X_N||_H = {:.4}{}\n",
        exp.method,
        exp.linear,
        stats.steps,
        stats.sup_norm_e,
        stats.sup_norm_h,
        stats.terminal.norm_h(),
        if stats.blown_up { " (blown up)" } else { "" }
    );
    Ok(Outcome {
        files: vec![("trajectory.csv", csv)],
        report,
        checks_passed: !stats.blown_up,
    })
}

fn write_outputs(dir: &Path, files: &[(&str, String)], summary: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    std::fs::write(dir.join("summary.txt"), summary)?;
    Ok(())
}

fn execute(options: &RunOptions, cfg: &RunConfig) -> Result<Outcome> {
    match options.command {
        Command::Lemmas => Ok(run_lemmas(cfg)),
        Command::Simulate => run_simulate(cfg),
        Command::Strong => run_strong(cfg),
        Command::Weak => run_weak(cfg),
        Command::Localize => run_localize(cfg),
    }
}

/// Loads the config, runs the command and writes its outputs. Returns the
/// process exit status: 0 on success, 1 when `--check` thresholds fail,
/// 2 on configuration or I/O errors.
pub fn run(options: &RunOptions) -> i32 {
    let text = match std::fs::read_to_string(&options.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "error: cannot read config {}: {e}",
                options.config.display()
            );
            return 2;
        }
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", options.config.display());
            return 2;
        }
    };
    if let Some(seed) = options.seed {
        cfg.experiment.master_seed = seed;
    }

    let started = Instant::now();
    let outcome = match execute(options, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let elapsed = started.elapsed();

    let mut summary = format!(
        "acsplit {VERSION}\ncommand: {}\nconfig: {}\nconfig_sha256: {}\nseed: {}\nwall_clock_s: {:.3}\n\n",
        options.command.name(),
        options.config.display(),
        cfg.hash(),
        cfg.experiment.master_seed,
        elapsed.as_secs_f64()
    );
    summary.push_str(&outcome.report);
    if options.check {
        let _ = writeln!(
            summary,
            "check: {}",
            if outcome.checks_passed {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }
    if let Err(e) = write_outputs(&options.out_dir, &outcome.files, &summary) {
        eprintln!("error: writing to {}: {e}", options.out_dir.display());
        return 2;
    }
    print!("{summary}");
    if options.check && !outcome.checks_passed {
        return 1;
    }
    0
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Command::Lemmas),
            "simulate" => Ok(Command::Simulate),
            "strong" => Ok(Command::Strong),
            "weak" => Ok(Command::Weak),
            "localize" => Ok(Command::Localize),
            other => Err(Error::InvalidArgument(format!("unknown command '{other}'"))),
        }
    }
}
