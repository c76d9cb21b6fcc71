//! One-step splitting integrators.
//!
//! Every scheme alternates the exact reaction flow `phi` with a linear
//! step `S` approximating `exp(t A_h)` and the noise:
//!
//! | method   | update                                                      |
//! |----------|-------------------------------------------------------------|
//! | `M1`     | `x' = S_dt(phi_dt(x) + dw)`                                 |
//! | `M2`     | `x' = S_{dt/2}(phi_dt(S_{dt/2} x) + dw)`                    |
//! | `M3`     | `x' = S_{dt/2}(phi_dt(S_{dt/2}(x + dw/2)) + dw/2)`          |
//! | `Strang` | `x' = phi_{dt/2}(S_dt(phi_{dt/2}(x) + dw))`                 |
//!
//! `S` is the implicit resolvent `(I - t A_h)^{-1}` or the semigroup
//! `exp(t A_h)`. With the exact integrator (M1 only) the noise term is the
//! sampled stochastic convolution instead of `S_dt dw`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::flows::FlowParams;
use crate::grid::{norm_e, norm_h, DiscreteOperator, GridFunction, Resolvent};
use crate::noise::{IncrementBlock, NoiseKind, NoisePlan};

/// Sup-norm above which a trajectory is declared blown up.
pub const OVERFLOW_GUARD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    M1,
    /// `M1` with the linear step applied to `x` instead of `phi_dt(x)`, so
    /// the reaction sub-step is discarded. Kept only for comparison.
    M1Literal,
    M2,
    M3,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinearIntegrator {
    Imp,
    Expo,
    Exact,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::M1,
        Method::M1Literal,
        Method::M2,
        Method::M3,
        Method::Strang,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::M1 => "m1",
            Method::M1Literal => "m1_literal",
            Method::M2 => "m2",
            Method::M3 => "m3",
            Method::Strang => "strang",
        }
    }
}

impl LinearIntegrator {
    pub fn name(&self) -> &'static str {
        match self {
            LinearIntegrator::Imp => "imp",
            LinearIntegrator::Expo => "expo",
            LinearIntegrator::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for LinearIntegrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "1" => Ok(Method::M1),
            "m1_literal" => Ok(Method::M1Literal),
            "m2" | "2" => Ok(Method::M2),
            "m3" | "3" => Ok(Method::M3),
            "strang" => Ok(Method::Strang),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }
}

impl FromStr for LinearIntegrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imp" => Ok(LinearIntegrator::Imp),
            "expo" => Ok(LinearIntegrator::Expo),
            "exact" => Ok(LinearIntegrator::Exact),
            other => Err(invalid(format!("unknown linear integrator '{other}'"))),
        }
    }
}

/// A scheme together with its time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    method: Method,
    linear: LinearIntegrator,
    dt: f64,
}

impl SchemeSpec {
    pub fn new(method: Method, linear: LinearIntegrator, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt < 1.0) {
            return Err(invalid(format!("time step must lie in (0, 1), got {dt}")));
        }
        if linear == LinearIntegrator::Exact && method != Method::M1 {
            return Err(invalid(format!(
                "the exact linear integrator is only defined for m1, not {method}"
            )));
        }
        Ok(SchemeSpec { method, linear, dt })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn linear(&self) -> LinearIntegrator {
        self.linear
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.method, self.linear, dt)
    }

    /// Noise representation the scheme consumes.
    pub fn noise_kind(&self) -> NoiseKind {
        match self.linear {
            LinearIntegrator::Exact => NoiseKind::Convolution,
            _ => NoiseKind::Increment,
        }
    }
}

/// Substitutions for testing the composition structure of the schemes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepHooks {
    /// Replace `phi_t` by the identity.
    pub identity_flow: bool,
    /// Replace `S_t` by the identity.
    pub identity_linear: bool,
}

#[derive(Debug, Clone)]
enum LinearStep {
    Identity,
    Resolvent(Resolvent),
    Spectral(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub x: GridFunction,
    pub n: u64,
    pub blown_up: bool,
}

impl StepState {
    pub fn new(x: GridFunction) -> Self {
        let blown_up = exceeds_guard(x.values());
        StepState { x, n: 0, blown_up }
    }
}

#[inline]
fn exceeds_guard(values: &[f64]) -> bool {
    values.iter().any(|v| !(v.abs() <= OVERFLOW_GUARD))
}

/// A scheme bound to an operator, with its linear solvers precomputed.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    spec: SchemeSpec,
    op: &'a DiscreteOperator,
    full: LinearStep,
    half: LinearStep,
    flow_full: FlowParams,
    flow_half: FlowParams,
    identity_flow: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: SchemeSpec, op: &'a DiscreteOperator) -> Self {
        Self::with_hooks(spec, op, StepHooks::default())
    }

    pub fn with_hooks(spec: SchemeSpec, op: &'a DiscreteOperator, hooks: StepHooks) -> Self {
        let linear = |t: f64| -> LinearStep {
            if hooks.identity_linear {
                return LinearStep::Identity;
            }
            match spec.linear {
                LinearIntegrator::Imp => {
                    LinearStep::Resolvent(op.resolvent(t).expect("positive step"))
                }
                LinearIntegrator::Expo | LinearIntegrator::Exact => {
                    LinearStep::Spectral(op.semigroup_factors(t))
                }
            }
        };
        let dt = spec.dt;
        Stepper {
            spec,
            op,
            full: linear(dt),
            half: linear(dt / 2.0),
            flow_full: FlowParams::new(dt).expect("positive step"),
            flow_half: FlowParams::new(dt / 2.0).expect("positive step"),
            identity_flow: hooks.identity_flow,
        }
    }

    pub fn spec(&self) -> &SchemeSpec {
        &self.spec
    }

    pub fn operator(&self) -> &DiscreteOperator {
        self.op
    }

    fn apply_linear(&self, which: &LinearStep, x: &mut [f64]) {
        match which {
            LinearStep::Identity => {}
            LinearStep::Resolvent(r) => r.solve_in_place(x),
            LinearStep::Spectral(f) => self.op.apply_spectral_in_place(f, x),
        }
    }

    fn apply_flow(&self, flow: &FlowParams, x: &mut [f64]) {
        if !self.identity_flow {
            flow.phi_in_place(x);
        }
    }

    /// Advances `x` by one step with the given noise values, in place.
    /// No blow-up bookkeeping; callers check the result.
    pub fn advance_in_place(&self, x: &mut [f64], noise: &[f64]) {
        debug_assert_eq!(x.len(), noise.len());
        match self.spec.method {
            Method::M1 => {
                self.apply_flow(&self.flow_full, x);
                if self.spec.linear == LinearIntegrator::Exact {
                    self.apply_linear(&self.full, x);
                    add(x, noise, 1.0);
                } else {
                    add(x, noise, 1.0);
                    self.apply_linear(&self.full, x);
                }
            }
            Method::M1Literal => {
                add(x, noise, 1.0);
                self.apply_linear(&self.full, x);
            }
            Method::M2 => {
                self.apply_linear(&self.half, x);
                self.apply_flow(&self.flow_full, x);
                add(x, noise, 1.0);
                self.apply_linear(&self.half, x);
            }
            Method::M3 => {
                add(x, noise, 0.5);
                self.apply_linear(&self.half, x);
                self.apply_flow(&self.flow_full, x);
                add(x, noise, 0.5);
                self.apply_linear(&self.half, x);
            }
            Method::Strang => {
                self.apply_flow(&self.flow_half, x);
                add(x, noise, 1.0);
                self.apply_linear(&self.full, x);
                self.apply_flow(&self.flow_half, x);
            }
        }
    }

    /// One step of the scheme. A non-finite or overflowing result sets
    /// `blown_up`; once set, further steps leave the state untouched.
    pub fn step(&self, state: &StepState, dw: &IncrementBlock) -> Result<StepState> {
        self.check_noise(dw)?;
        state.x.mesh().check_same(&dw.values.mesh())?;
        let mut next = state.clone();
        if state.blown_up {
            return Ok(next);
        }
        self.advance_in_place(next.x.values_mut(), dw.values.values());
        next.n += 1;
        next.blown_up = exceeds_guard(next.x.values());
        Ok(next)
    }

    fn check_noise(&self, dw: &IncrementBlock) -> Result<()> {
        if (dw.dt - self.spec.dt).abs() > 1e-12 * self.spec.dt {
            return Err(invalid(format!(
                "noise block covers dt={} but the scheme steps dt={}",
                dw.dt, self.spec.dt
            )));
        }
        if dw.kind != self.spec.noise_kind() {
            return Err(invalid(format!(
                "{} integrator needs {:?} noise, got {:?}",
                self.spec.linear,
                self.spec.noise_kind(),
                dw.kind
            )));
        }
        Ok(())
    }
}

#[inline]
fn add(x: &mut [f64], noise: &[f64], factor: f64) {
    if factor == 1.0 {
        x.iter_mut().zip(noise).for_each(|(a, b)| *a += b);
    } else {
        x.iter_mut().zip(noise).for_each(|(a, b)| *a += factor * b);
    }
}

/// Number of steps `floor(T/dt)`, tolerant to rounding in dyadic ratios.
pub fn step_count(horizon: f64, dt: f64) -> u64 {
    let ratio = horizon / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        ratio.floor() as u64
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrajectoryOptions {
    /// Multiplies every noise block; 0 gives the deterministic equation.
    pub noise_scale: f64,
    /// Times at which to keep a copy of the state.
    pub snapshot_times: Vec<f64>,
    pub hooks: StepHooks,
}

impl TrajectoryOptions {
    pub fn new() -> Self {
        TrajectoryOptions {
            noise_scale: 1.0,
            ..Default::default()
        }
    }
}

/// Summary of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub terminal: GridFunction,
    /// `max_n |X_n|_E`, including the initial state.
    pub sup_norm_e: f64,
    /// `max_n ||X_n||_H`, including the initial state.
    pub sup_norm_h: f64,
    pub blown_up: bool,
    pub steps: u64,
    pub snapshots: Vec<(f64, GridFunction)>,
}

impl TrajectoryStats {
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.blown_up || self.sup_norm_e > threshold
    }
}

/// Running sup-norms and blow-up flag of a path advanced in place.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PathMonitor {
    pub sup_e: f64,
    pub sup_h: f64,
    pub blown_up: bool,
}

impl PathMonitor {
    pub fn start(dx: f64, x: &[f64]) -> Self {
        let mut m = PathMonitor {
            sup_e: 0.0,
            sup_h: 0.0,
            blown_up: false,
        };
        m.observe(dx, x);
        m
    }

    #[inline]
    pub fn observe(&mut self, dx: f64, x: &[f64]) {
        let e = norm_e(x);
        if !(e <= OVERFLOW_GUARD) {
            self.blown_up = true;
            return;
        }
        self.sup_e = self.sup_e.max(e);
        self.sup_h = self.sup_h.max(norm_h(dx, x));
    }
}

/// Simulates `floor(T/dt)` steps from `x0`, drawing noise from `plan` at
/// the level matching the scheme's step.
pub fn run_trajectory(
    spec: &SchemeSpec,
    op: &DiscreteOperator,
    x0: &GridFunction,
    plan: &NoisePlan,
    horizon: f64,
    options: &TrajectoryOptions,
) -> Result<TrajectoryStats> {
    op.mesh().check_same(&x0.mesh())?;
    op.mesh().check_same(&plan.mesh())?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid(format!(
            "horizon must be finite and >= 0, got {horizon}"
        )));
    }
    let level = plan.level_of(spec.dt()).ok_or_else(|| {
        invalid(format!(
            "time step {} is not a dyadic multiple of the plan's fine step {}",
            spec.dt(),
            plan.dt_fine()
        ))
    })?;
    let stepper = Stepper::with_hooks(*spec, op, options.hooks);
    let n_steps = step_count(horizon, spec.dt());
    let dx = op.mesh().dx();

    let mut snapshot_steps: Vec<(u64, f64)> = options
        .snapshot_times
        .iter()
        .filter(|t| **t >= 0.0 && **t <= horizon)
        .map(|&t| (step_count(t, spec.dt()), t))
        .collect();
    snapshot_steps.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());
    let mut next_snap = snapshot_steps.iter().peekable();

    let mut x = x0.clone();
    let mut monitor = PathMonitor::start(dx, x.values());
    let mut steps_taken = 0;
    let mut take_snapshots = |n: u64, x: &GridFunction, snaps: &mut Vec<(f64, GridFunction)>| {
        while let Some(&&(s, t)) = next_snap.peek() {
            if s > n {
                break;
            }
            snaps.push((t, x.clone()));
            next_snap.next();
        }
    };
    take_snapshots(0, &x, &mut snapshots);

    for n in 0..n_steps {
        if monitor.blown_up {
            break;
        }
        let mut dw = match spec.noise_kind() {
            NoiseKind::Increment => plan.increment(level, n)?,
            NoiseKind::Convolution => plan.convolution(op, level, n)?,
        };
        if options.noise_scale != 1.0 {
            dw.values = dw.values.scaled(options.noise_scale);
        }
        stepper.advance_in_place(x.values_mut(), dw.values.values());
        steps_taken = n + 1;
        monitor.observe(dx, x.values());
        take_snapshots(n + 1, &x, &mut snapshots);
    }

    Ok(TrajectoryStats {
        terminal: x,
        sup_norm_e: monitor.sup_e,
        sup_norm_h: monitor.sup_h,
        blown_up: monitor.blown_up,
        steps: steps_taken,
        snapshots,
    })
}
