//! Convergence-order experiments on coupled paths.
//!
//! For a step `dt`, each replica simulates the scheme with `dt` and with
//! `dt/2` on the same Brownian path: the fine run consumes the level-0
//! increments of a plan whose fine step is `dt/2`, the coarse run consumes
//! their pairwise sums. Because the plan key contains the fine step,
//! different `dt` columns draw from independent streams.
//!
//! Per-replica results are collected in replica order and reduced
//! sequentially, so every estimate is independent of the worker count.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{norm_h, DiscreteOperator, GridFunction, Mesh};
use crate::noise::{NoiseKind, NoisePlan};
use crate::schemes::{step_count, LinearIntegrator, Method, PathMonitor, SchemeSpec, Stepper};
use crate::stats::{fit_line, MeanEstimate};

/// Fraction of blown-up replicas above which a row is flagged invalid.
pub const MAX_BLOWUP_FRACTION: f64 = 0.01;

/// Rows whose standard error exceeds this fraction of the estimate are
/// left out of the slope fit.
pub const MAX_RELATIVE_STDERR: f64 = 0.3;

/// Test functional applied to the terminal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `exp(-5 ||x||_H^2)`.
    ExpNeg5H2,
    /// Constant functional, for checking the estimator plumbing.
    Constant(f64),
}

impl TestFunction {
    pub fn evaluate(&self, x: &GridFunction) -> f64 {
        self.evaluate_values(x.mesh().dx(), x.values())
    }

    pub fn evaluate_values(&self, dx: f64, x: &[f64]) -> f64 {
        match self {
            TestFunction::ExpNeg5H2 => {
                let h = norm_h(dx, x);
                (-5.0 * h * h).exp()
            }
            TestFunction::Constant(c) => *c,
        }
    }
}

/// `exp(-5 ||x||_H^2)`.
pub fn evaluate_test_function(x: &GridFunction) -> f64 {
    TestFunction::ExpNeg5H2.evaluate(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `amplitude * sin(pi x)`.
    Sine {
        amplitude: f64,
    },
    /// `-1` on `(0, 1/2)` and `+1` on `[1/2, 1)`.
    TwoPhase,
}

impl InitialCondition {
    pub fn build(&self, mesh: Mesh) -> GridFunction {
        match *self {
            InitialCondition::Zero => GridFunction::zeros(mesh),
            InitialCondition::Sine { amplitude } => {
                GridFunction::sine_mode(mesh, 1).scaled(amplitude)
            }
            InitialCondition::TwoPhase => {
                GridFunction::from_fn(mesh, |x| if x < 0.5 { -1.0 } else { 1.0 })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizon: f64,
    pub mesh: Mesh,
    /// Decreasing time steps, each half of the previous one.
    pub dt_list: Vec<f64>,
    pub n_replicas: usize,
    pub method: Method,
    pub linear: LinearIntegrator,
    pub master_seed: u64,
    pub test_function: TestFunction,
    pub localization_m: Option<f64>,
    pub initial: InitialCondition,
    /// Multiplies the noise; 1 for the stochastic equation.
    pub noise_scale: f64,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults: `T = 1`, `dx = 1/128`, `dt = 2^-4 .. 2^-9`,
    /// 2000 replicas, method 1 with the implicit integrator, `x0 = 0`.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            horizon: 1.0,
            mesh: Mesh::with_cells(128).expect("valid mesh"),
            dt_list: dyadic_steps(4, 9),
            n_replicas: 2000,
            method: Method::M1,
            linear: LinearIntegrator::Imp,
            master_seed: 2024,
            test_function: TestFunction::ExpNeg5H2,
            localization_m: None,
            initial: InitialCondition::Zero,
            noise_scale: 1.0,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.n_replicas < 2 {
            return Err(invalid("n_replicas must be at least 2"));
        }
        if self.dt_list.is_empty() {
            return Err(invalid("dt_list is empty"));
        }
        for pair in self.dt_list.windows(2) {
            let ratio = pair[0] / pair[1];
            if (ratio - 2.0).abs() > 1e-12 {
                return Err(invalid(format!(
                    "consecutive time steps must halve: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &dt in &self.dt_list {
            self.spec(dt)?;
        }
        if let Some(m) = self.localization_m {
            if !(m > 0.0) {
                return Err(invalid(format!(
                    "localization threshold must be positive, got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self, dt: f64) -> Result<SchemeSpec> {
        SchemeSpec::new(self.method, self.linear, dt)
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        if self.threads == 0 {
            return Ok(job());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// `[2^-from, ..., 2^-to]`.
pub fn dyadic_steps(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|k| (0.5f64).powi(k as i32)).collect()
}

/// Terminal states and path statistics of one coupled replica.
#[derive(Debug, Clone)]
pub struct CoupledPaths {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub coarse_sup_e: f64,
    pub fine_sup_e: f64,
    pub blown_up: bool,
}

fn noise_plan(config: &ExperimentConfig, dt: f64, replica: u64) -> Result<NoisePlan> {
    NoisePlan::new(config.master_seed, replica, config.mesh, dt / 2.0, 1)
}

/// Runs the `dt` and `dt/2` schemes of `replica` on one Brownian path.
pub fn simulate_coupled(
    config: &ExperimentConfig,
    op: &DiscreteOperator,
    dt: f64,
    replica: u64,
) -> Result<CoupledPaths> {
    let coarse_spec = config.spec(dt)?;
    let fine_spec = config.spec(dt / 2.0)?;
    let coarse_step = Stepper::new(coarse_spec, op);
    let fine_step = Stepper::new(fine_spec, op);
    let plan = noise_plan(config, dt, replica)?;
    let n = config.mesh.n_interior();
    let dx = config.mesh.dx();

    let x0 = config.initial.build(config.mesh).into_values();
    let mut coarse = x0.clone();
    let mut fine = x0;
    let mut coarse_mon = PathMonitor::start(dx, &coarse);
    let mut fine_mon = PathMonitor::start(dx, &fine);

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut sum = vec![0.0; n];
    let carry = match coarse_spec.noise_kind() {
        NoiseKind::Convolution => Some(op.semigroup_factors(dt / 2.0)),
        NoiseKind::Increment => None,
    };
    let scale = config.noise_scale;

    for k in 0..step_count(config.horizon, dt) {
        match &carry {
            None => {
                plan.fill_fine_increment(2 * k, &mut a);
                plan.fill_fine_increment(2 * k + 1, &mut b);
            }
            Some(_) => {
                plan.fill_fine_convolution(op, 2 * k, &mut a);
                plan.fill_fine_convolution(op, 2 * k + 1, &mut b);
            }
        }
        if scale != 1.0 {
            a.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= scale);
        }
        match &carry {
            None => {
                for ((s, x), y) in sum.iter_mut().zip(&a).zip(&b) {
                    *s = x + y;
                }
            }
            Some(factors) => {
                sum.copy_from_slice(&a);
                op.apply_spectral_in_place(factors, &mut sum);
                sum.iter_mut().zip(&b).for_each(|(s, y)| *s += y);
            }
        }
        fine_step.advance_in_place(&mut fine, &a);
        fine_mon.observe(dx, &fine);
        fine_step.advance_in_place(&mut fine, &b);
        fine_mon.observe(dx, &fine);
        coarse_step.advance_in_place(&mut coarse, &sum);
        coarse_mon.observe(dx, &coarse);
        if coarse_mon.blown_up || fine_mon.blown_up {
            break;
        }
    }

    Ok(CoupledPaths {
        coarse,
        fine,
        coarse_sup_e: coarse_mon.sup_e,
        fine_sup_e: fine_mon.sup_e,
        blown_up: coarse_mon.blown_up || fine_mon.blown_up,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub dt: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_valid: usize,
    pub n_blowup: usize,
}

impl ErrorRow {
    /// Fewer than 1% blow-ups and at least two usable replicas.
    pub fn is_valid(&self) -> bool {
        let total = (self.n_valid + self.n_blowup) as f64;
        self.n_valid >= 2 && (self.n_blowup as f64) <= MAX_BLOWUP_FRACTION * total
    }
}

fn coupled_samples<T: Send>(
    config: &ExperimentConfig,
    dt: f64,
    per_replica: impl Fn(&CoupledPaths, f64) -> T + Sync + Send,
) -> Result<Vec<Option<T>>> {
    config.validate()?;
    config.spec(dt)?;
    config.spec(dt / 2.0)?;
    let op = DiscreteOperator::new(config.mesh);
    let dx = config.mesh.dx();
    let op = &op;
    let per_replica = &per_replica;
    config.install(move || {
        (0..config.n_replicas as u64)
            .into_par_iter()
            .map(|r| {
                let paths = simulate_coupled(config, op, dt, r)?;
                Ok((!paths.blown_up).then(|| per_replica(&paths, dx)))
            })
            .collect::<Result<Vec<_>>>()
    })?
}

fn row_from(dt: f64, samples: Vec<Option<f64>>) -> (ErrorRow, Vec<f64>) {
    let n_blowup = samples.iter().filter(|s| s.is_none()).count();
    let valid: Vec<f64> = samples.into_iter().flatten().collect();
    let est = MeanEstimate::from_samples(&valid);
    (
        ErrorRow {
            dt,
            estimate: est.mean,
            stderr: est.stderr,
            n_valid: valid.len(),
            n_blowup,
        },
        valid,
    )
}

fn squared_h_distance(dx: f64, a: &[f64], b: &[f64]) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

/// Mean-square distance `E ||X_N^{dt} - X_{2N}^{dt/2}||_H^2` on coupled paths.
pub fn strong_error(config: &ExperimentConfig, dt: f64) -> Result<ErrorRow> {
    let samples = coupled_samples(config, dt, |p, dx| {
        squared_h_distance(dx, &p.coarse, &p.fine)
    })?;
    Ok(row_from(dt, samples).0)
}

/// Weak increment `E[f(X_N^{dt})] - E[f(X_{2N}^{dt/2})]` on coupled paths,
/// with the variances that show what the coupling buys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakIncrement {
    pub row: ErrorRow,
    /// Sample variance of `f(coarse) - f(fine)`.
    pub coupled_variance: f64,
    /// Sample variance of `f(coarse)` alone.
    pub coarse_variance: f64,
}

pub fn weak_error_increment(config: &ExperimentConfig, dt: f64) -> Result<WeakIncrement> {
    let f = config.test_function;
    let samples = coupled_samples(config, dt, |p, dx| {
        (
            f.evaluate_values(dx, &p.coarse),
            f.evaluate_values(dx, &p.fine),
        )
    })?;
    let coarse_values: Vec<f64> = samples.iter().flatten().map(|(c, _)| *c).collect();
    let diffs = samples.into_iter().map(|s| s.map(|(c, f)| c - f)).collect();
    let (row, valid) = row_from(dt, diffs);
    Ok(WeakIncrement {
        row,
        coupled_variance: MeanEstimate::from_samples(&valid).variance,
        coarse_variance: MeanEstimate::from_samples(&coarse_values).variance,
    })
}

/// Telescoped weak error `E[f(X^{dt})] - E[f(X^{dt/2^k})]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TelescopedWeakError {
    pub dt: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub levels: Vec<ErrorRow>,
}

impl TelescopedWeakError {
    pub fn is_valid(&self) -> bool {
        self.levels.iter().all(ErrorRow::is_valid)
    }
}

pub fn weak_error_telescoped(
    config: &ExperimentConfig,
    dt: f64,
    k_levels: u32,
) -> Result<TelescopedWeakError> {
    if k_levels == 0 {
        return Err(invalid("telescoping needs at least one level"));
    }
    let mut levels = Vec::with_capacity(k_levels as usize);
    let mut h = dt;
    for _ in 0..k_levels {
        levels.push(weak_error_increment(config, h)?.row);
        h /= 2.0;
    }
    Ok(telescope(dt, levels))
}

/// Sums per-level increments, combining standard errors in quadrature.
pub fn telescope(dt: f64, levels: Vec<ErrorRow>) -> TelescopedWeakError {
    let estimate = levels.iter().map(|r| r.estimate).sum();
    let stderr = levels
        .iter()
        .map(|r| r.stderr * r.stderr)
        .sum::<f64>()
        .sqrt();
    TelescopedWeakError {
        dt,
        estimate,
        stderr,
        levels,
    }
}

/// Rows of error estimates with the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ErrorRow>,
    pub slope: Option<f64>,
    pub slope_half_width: Option<f64>,
}

impl ConvergenceTable {
    /// Builds the table and fits the slope when enough rows qualify.
    pub fn new(rows: Vec<ErrorRow>) -> Self {
        let (slope, slope_half_width) = match fit_slope(&rows) {
            Ok((s, w)) => (Some(s), Some(w)),
            Err(_) => (None, None),
        };
        ConvergenceTable {
            rows,
            slope,
            slope_half_width,
        }
    }

    pub fn all_valid(&self) -> bool {
        self.rows.iter().all(ErrorRow::is_valid)
    }
}

/// Rows entering the slope fit: valid, nonzero, and with a standard error
/// below 30% of `|estimate|`.
pub fn fit_rows(rows: &[ErrorRow]) -> Vec<ErrorRow> {
    rows.iter()
        .copied()
        .filter(|r| {
            let e = r.estimate.abs();
            r.is_valid() && e > 0.0 && e.is_finite() && r.stderr < MAX_RELATIVE_STDERR * e
        })
        .collect()
}

/// Least-squares slope of `log2 |estimate|` against `log2 dt` and its 95%
/// half-width.
pub fn fit_slope(rows: &[ErrorRow]) -> Result<(f64, f64)> {
    let used = fit_rows(rows);
    if used.len() < 3 {
        return Err(Error::Estimation(format!(
            "only {} usable rows, need at least 3",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|r| r.dt.log2()).collect();
    let ys: Vec<f64> = used.iter().map(|r| r.estimate.abs().log2()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok((fit.slope, fit.half_width_95()))
}

pub fn strong_table(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let rows = config
        .dt_list
        .iter()
        .map(|&dt| strong_error(config, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::new(rows))
}

pub fn weak_table(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let rows = config
        .dt_list
        .iter()
        .map(|&dt| weak_error_increment(config, dt).map(|w| w.row))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::new(rows))
}

/// Telescoped totals against the finest level of a weak table:
/// entry `i` is `E[f(X^{dt_i})] - E[f(X^{dt_last/2})]`.
pub fn telescoped_totals(table: &ConvergenceTable) -> Vec<TelescopedWeakError> {
    (0..table.rows.len())
        .map(|i| telescope(table.rows[i].dt, table.rows[i..].to_vec()))
        .collect()
}

/// Empirical probability of leaving the localisation set and the
/// mean-square distance restricted to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationStats {
    pub threshold: f64,
    /// `P(sup_n |X_n^{dt}|_E > M)`.
    pub prob_exceed: f64,
    pub prob_stderr: f64,
    /// `E[||X_N^{dt} - X_{2N}^{dt/2}||_H^2 1{sup_n |X_n^{dt}|_E <= M}]`.
    pub localized_mse: f64,
    pub unlocalized_mse: f64,
    pub n_replicas: usize,
}

pub fn localization_stats(
    config: &ExperimentConfig,
    dt: f64,
    thresholds: &[f64],
) -> Result<Vec<LocalizationStats>> {
    if let Some(m) = thresholds.iter().find(|m| !(**m > 0.0)) {
        return Err(invalid(format!("threshold must be positive, got {m}")));
    }
    // blown-up paths count as exceeding every threshold
    let samples: Vec<(f64, f64)> = coupled_samples(config, dt, |p, dx| {
        (p.coarse_sup_e, squared_h_distance(dx, &p.coarse, &p.fine))
    })?
    .into_iter()
    .map(|s| s.unwrap_or((f64::INFINITY, 0.0)))
    .collect();
    let n = samples.len();
    let total_mse = samples.iter().map(|s| s.1).sum::<f64>() / n as f64;
    Ok(thresholds
        .iter()
        .map(|&m| {
            let exceed: Vec<f64> = samples
                .iter()
                .map(|(sup, _)| if *sup > m { 1.0 } else { 0.0 })
                .collect();
            let p = MeanEstimate::from_samples(&exceed);
            let localized = samples
                .iter()
                .filter(|(sup, _)| *sup <= m)
                .map(|s| s.1)
                .sum::<f64>()
                / n as f64;
            LocalizationStats {
                threshold: m,
                prob_exceed: p.mean,
                prob_stderr: p.stderr,
                localized_mse: localized,
                unlocalized_mse: total_mse,
                n_replicas: n,
            }
        })
        .collect())
}

/// Empirical `E[sup_n |X_n|_E^2]` for single (uncoupled) paths with step `dt`.
pub fn sup_norm_moment(config: &ExperimentConfig, dt: f64) -> Result<ErrorRow> {
    config.validate()?;
    let spec = config.spec(dt)?;
    let op = DiscreteOperator::new(config.mesh);
    let op = &op;
    let samples = config.install(move || {
        (0..config.n_replicas as u64)
            .into_par_iter()
            .map(|r| {
                let plan = NoisePlan::new(config.master_seed, r, config.mesh, dt, 1)?;
                let stats = single_path(config, op, &spec, &plan)?;
                Ok((!stats.blown_up).then_some(stats.sup_e * stats.sup_e))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(row_from(dt, samples).0)
}

fn single_path(
    config: &ExperimentConfig,
    op: &DiscreteOperator,
    spec: &SchemeSpec,
    plan: &NoisePlan,
) -> Result<PathMonitor> {
    let stepper = Stepper::new(*spec, op);
    let dx = config.mesh.dx();
    let mut x = config.initial.build(config.mesh).into_values();
    let mut noise = vec![0.0; x.len()];
    let mut mon = PathMonitor::start(dx, &x);
    for k in 0..step_count(config.horizon, spec.dt()) {
        match spec.noise_kind() {
            NoiseKind::Increment => plan.fill_fine_increment(k, &mut noise),
            NoiseKind::Convolution => plan.fill_fine_convolution(op, k, &mut noise),
        }
        if config.noise_scale != 1.0 {
            noise.iter_mut().for_each(|v| *v *= config.noise_scale);
        }
        stepper.advance_in_place(&mut x, &noise);
        mon.observe(dx, &x);
        if mon.blown_up {
            break;
        }
    }
    Ok(mon)
}
