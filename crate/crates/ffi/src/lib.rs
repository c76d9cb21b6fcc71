//! C interface to `acsplit`.
//!
//! Every fallible function returns an [`AcsStatus`]; outputs go through
//! caller-provided pointers. Operators and experiment configurations are
//! opaque handles created by `*_new` functions and released with the
//! matching `*_free`. The message of the most recent failure on the
//! calling thread is available from [`acs_last_error_message`].
//!
//! Panics never cross the boundary: they are caught and reported as
//! `ACS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use acsplit::config::RunConfig;
use acsplit::experiments::{strong_error, weak_error_increment, ErrorRow};
use acsplit::flows::FlowParams;
use acsplit::schemes::{run_trajectory, TrajectoryOptions};
use acsplit::{
    DiscreteOperator, Error, ExperimentConfig, GridFunction, LinearIntegrator, Mesh, Method,
    NoisePlan,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshMismatch = 3,
    Config = 4,
    Estimation = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcsMethod {
    M1 = 0,
    M1Literal = 1,
    M2 = 2,
    M3 = 3,
    Strang = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcsLinear {
    Imp = 0,
    Expo = 1,
    Exact = 2,
}

/// One row of a convergence table.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcsErrorRow {
    pub dt: f64,
    pub estimate: f64,
    /// Standard error of `estimate`.
    pub std_error: f64,
    pub n_valid: u64,
    pub n_blowup: u64,
}

/// Summary of one simulated path.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcsPathSummary {
    pub steps: u64,
    pub sup_norm_e: f64,
    pub sup_norm_h: f64,
    pub blown_up: bool,
}

/// Opaque discrete Dirichlet Laplacian.
pub struct AcsOperator {
    inner: DiscreteOperator,
}

/// Opaque experiment configuration.
pub struct AcsExperiment {
    inner: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> AcsStatus {
    match err {
        Error::MeshMismatch { .. } => AcsStatus::MeshMismatch,
        Error::InvalidArgument(_) => AcsStatus::InvalidArgument,
        Error::Config { .. } => AcsStatus::Config,
        Error::Estimation(_) => AcsStatus::Estimation,
        Error::Io(_) => AcsStatus::Io,
    }
}

struct Fail(AcsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AcsStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> AcsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            AcsStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_last_error(&msg);
            code
        }
        Err(_) => {
            set_last_error("internal panic");
            AcsStatus::Panic
        }
    }
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn method_of(m: AcsMethod) -> Method {
    match m {
        AcsMethod::M1 => Method::M1,
        AcsMethod::M1Literal => Method::M1Literal,
        AcsMethod::M2 => Method::M2,
        AcsMethod::M3 => Method::M3,
        AcsMethod::Strang => Method::Strang,
    }
}

fn linear_of(l: AcsLinear) -> LinearIntegrator {
    match l {
        AcsLinear::Imp => LinearIntegrator::Imp,
        AcsLinear::Expo => LinearIntegrator::Expo,
        AcsLinear::Exact => LinearIntegrator::Exact,
    }
}

fn row_of(r: ErrorRow) -> AcsErrorRow {
    AcsErrorRow {
        dt: r.dt,
        estimate: r.estimate,
        std_error: r.stderr,
        n_valid: r.n_valid as u64,
        n_blowup: r.n_blowup as u64,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn acs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Reaction flow `phi(t, z)`.
///
/// # Safety
/// `out` must be null or valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn acs_phi(t: f64, z: f64, out: *mut f64) -> AcsStatus {
    guard(|| {
        let f = FlowParams::new(t)?;
        write(out, f.phi(z), "out")
    })
}

/// Increment map `psi(t, z) = (phi(t, z) - z) / t`, `z - z^3` at `t = 0`.
///
/// # Safety
/// `out` must be null or valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn acs_psi(t: f64, z: f64, out: *mut f64) -> AcsStatus {
    guard(|| {
        let f = FlowParams::new(t)?;
        write(out, f.psi(z), "out")
    })
}

/// Creates the operator on `n_interior` nodes of the unit interval.
///
/// # Safety
/// `out` must be null or valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn acs_operator_new(
    n_interior: usize,
    out: *mut *mut AcsOperator,
) -> AcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let op = AcsOperator {
            inner: DiscreteOperator::new(Mesh::new(n_interior)?),
        };
        out.write(Box::into_raw(Box::new(op)));
        Ok(())
    })
}

/// Releases an operator. Null is ignored.
///
/// # Safety
/// `op` must be null or a pointer from [`acs_operator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acs_operator_free(op: *mut AcsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of interior nodes, 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn acs_operator_len(op: *const AcsOperator) -> usize {
    op.as_ref().map_or(0, |o| o.inner.mesh().n_interior())
}

/// Mesh width `1/(n+1)`, 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn acs_operator_dx(op: *const AcsOperator) -> f64 {
    op.as_ref().map_or(0.0, |o| o.inner.mesh().dx())
}

unsafe fn operator<'a>(op: *const AcsOperator) -> Result<&'a DiscreteOperator, Fail> {
    op.as_ref()
        .map(|o| &o.inner)
        .ok_or_else(|| null("operator"))
}

unsafe fn with_vectors(
    op: *const AcsOperator,
    x: *const f64,
    out: *mut f64,
    len: usize,
    f: impl FnOnce(&DiscreteOperator, GridFunction) -> acsplit::Result<GridFunction>,
) -> AcsStatus {
    guard(|| {
        let op = operator(op)?;
        let n = op.mesh().n_interior();
        if len != n {
            return Err(Fail(
                AcsStatus::MeshMismatch,
                format!("vector length {len} does not match {n} nodes"),
            ));
        }
        let input = GridFunction::from_values(op.mesh(), slice_in(x, len, "x")?.to_vec())?;
        let dest = slice_out(out, len, "out")?;
        dest.copy_from_slice(f(op, input)?.values());
        Ok(())
    })
}

/// Eigenvalues of `-A_h` in increasing order, `len` must equal the node count.
///
/// # Safety
/// `op` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn acs_operator_eigenvalues(
    op: *const AcsOperator,
    out: *mut f64,
    len: usize,
) -> AcsStatus {
    guard(|| {
        let op = operator(op)?;
        let ev = op.eigenvalues();
        if len != ev.len() {
            return Err(Fail(
                AcsStatus::MeshMismatch,
                format!("expected {} values, got room for {len}", ev.len()),
            ));
        }
        slice_out(out, len, "out")?.copy_from_slice(ev);
        Ok(())
    })
}

/// `out = A_h x`.
///
/// # Safety
/// `op` must be a live handle; `x` valid for `len` reads and `out` for
/// `len` writes. `x` and `out` may alias.
#[no_mangle]
pub unsafe extern "C" fn acs_operator_apply_laplacian(
    op: *const AcsOperator,
    x: *const f64,
    out: *mut f64,
    len: usize,
) -> AcsStatus {
    with_vectors(op, x, out, len, |op, v| op.apply_laplacian(&v))
}

/// `out = (I - dt A_h)^{-1} x`.
///
/// # Safety
/// As for [`acs_operator_apply_laplacian`].
#[no_mangle]
pub unsafe extern "C" fn acs_operator_solve_resolvent(
    op: *const AcsOperator,
    dt: f64,
    x: *const f64,
    out: *mut f64,
    len: usize,
) -> AcsStatus {
    with_vectors(op, x, out, len, |op, v| op.solve_resolvent(dt, &v))
}

/// `out = exp(dt A_h) x`.
///
/// # Safety
/// As for [`acs_operator_apply_laplacian`].
#[no_mangle]
pub unsafe extern "C" fn acs_operator_apply_semigroup(
    op: *const AcsOperator,
    dt: f64,
    x: *const f64,
    out: *mut f64,
    len: usize,
) -> AcsStatus {
    with_vectors(op, x, out, len, |op, v| op.apply_semigroup(dt, &v))
}

/// Creates a configuration with the desk-scale defaults.
///
/// # Safety
/// `out` must be null or valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn acs_experiment_new(out: *mut *mut AcsExperiment) -> AcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let e = AcsExperiment {
            inner: ExperimentConfig::desk_scale(),
        };
        out.write(Box::into_raw(Box::new(e)));
        Ok(())
    })
}

/// Parses a `key = value` configuration text.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` must be null or
/// valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn acs_experiment_from_config(
    text: *const c_char,
    out: *mut *mut AcsExperiment,
) -> AcsStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Fail(AcsStatus::Config, "config text is not UTF-8".into()))?;
        let cfg = RunConfig::parse(text)?;
        out.write(Box::into_raw(Box::new(AcsExperiment {
            inner: cfg.experiment,
        })));
        Ok(())
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `exp` must be null or a pointer from an `acs_experiment_*` constructor
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acs_experiment_free(exp: *mut AcsExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

unsafe fn experiment_mut<'a>(exp: *mut AcsExperiment) -> Result<&'a mut ExperimentConfig, Fail> {
    exp.as_mut()
        .map(|e| &mut e.inner)
        .ok_or_else(|| null("experiment"))
}

unsafe fn experiment<'a>(exp: *const AcsExperiment) -> Result<&'a ExperimentConfig, Fail> {
    exp.as_ref()
        .map(|e| &e.inner)
        .ok_or_else(|| null("experiment"))
}

/// Sets the scheme. The pair is checked when the experiment runs.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn acs_experiment_set_scheme(
    exp: *mut AcsExperiment,
    method: AcsMethod,
    linear: AcsLinear,
) -> AcsStatus {
    guard(|| {
        let e = experiment_mut(exp)?;
        e.method = method_of(method);
        e.linear = linear_of(linear);
        Ok(())
    })
}

/// Sets the mesh to `n_interior` nodes.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn acs_experiment_set_mesh(
    exp: *mut AcsExperiment,
    n_interior: usize,
) -> AcsStatus {
    guard(|| {
        let mesh = Mesh::new(n_interior)?;
        experiment_mut(exp)?.mesh = mesh;
        Ok(())
    })
}

/// Sets the replica count, horizon and master seed.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn acs_experiment_set_sampling(
    exp: *mut AcsExperiment,
    n_replicas: usize,
    horizon: f64,
    master_seed: u64,
) -> AcsStatus {
    guard(|| {
        let e = experiment_mut(exp)?;
        if n_replicas < 2 || !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Fail(
                AcsStatus::InvalidArgument,
                format!(
                    "need n_replicas >= 2 and a positive horizon, got {n_replicas} and {horizon}"
                ),
            ));
        }
        e.n_replicas = n_replicas;
        e.horizon = horizon;
        e.master_seed = master_seed;
        Ok(())
    })
}

/// Simulates one path with step `dt` from the configured initial state and
/// writes the terminal state to `out` (`len` must equal the node count).
///
/// # Safety
/// `exp` must be a live handle, `out` valid for `len` writes and `summary`
/// null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn acs_simulate(
    exp: *const AcsExperiment,
    dt: f64,
    replica: u64,
    out: *mut f64,
    len: usize,
    summary: *mut AcsPathSummary,
) -> AcsStatus {
    guard(|| {
        let e = experiment(exp)?;
        let n = e.mesh.n_interior();
        if len != n {
            return Err(Fail(
                AcsStatus::MeshMismatch,
                format!("vector length {len} does not match {n} nodes"),
            ));
        }
        let spec = e.spec(dt)?;
        let op = DiscreteOperator::new(e.mesh);
        let plan = NoisePlan::new(e.master_seed, replica, e.mesh, dt, 1)?;
        let options = TrajectoryOptions {
            noise_scale: e.noise_scale,
            ..TrajectoryOptions::new()
        };
        let stats = run_trajectory(
            &spec,
            &op,
            &e.initial.build(e.mesh),
            &plan,
            e.horizon,
            &options,
        )?;
        slice_out(out, len, "out")?.copy_from_slice(stats.terminal.values());
        if !summary.is_null() {
            summary.write(AcsPathSummary {
                steps: stats.steps,
                sup_norm_e: stats.sup_norm_e,
                sup_norm_h: stats.sup_norm_h,
                blown_up: stats.blown_up,
            });
        }
        Ok(())
    })
}

/// Mean-square distance between the `dt` and `dt/2` schemes on coupled paths.
///
/// # Safety
/// `exp` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn acs_strong_error(
    exp: *const AcsExperiment,
    dt: f64,
    out: *mut AcsErrorRow,
) -> AcsStatus {
    guard(|| {
        let row = strong_error(experiment(exp)?, dt)?;
        write(out, row_of(row), "out")
    })
}

/// Weak increment `E f(X^dt) - E f(X^{dt/2})` with the configured test function.
///
/// # Safety
/// `exp` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn acs_weak_increment(
    exp: *const AcsExperiment,
    dt: f64,
    out: *mut AcsErrorRow,
) -> AcsStatus {
    guard(|| {
        let w = weak_error_increment(experiment(exp)?, dt)?;
        write(out, row_of(w.row), "out")
    })
}

/// Name of a status code as a static string.
#[no_mangle]
pub extern "C" fn acs_status_name(status: AcsStatus) -> *const c_char {
    let s: &'static str = match status {
        AcsStatus::Ok => "ok\0",
        AcsStatus::NullPointer => "null pointer\0",
        AcsStatus::InvalidArgument => "invalid argument\0",
        AcsStatus::MeshMismatch => "mesh mismatch\0",
        AcsStatus::Config => "config error\0",
        AcsStatus::Estimation => "estimation error\0",
        AcsStatus::Io => "io error\0",
        AcsStatus::Panic => "panic\0",
    };
    s.as_ptr().cast()
}
