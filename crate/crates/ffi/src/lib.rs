//! C interface to `transleak`.
//!
//! Objects are opaque handles created by `tl_*_new` and released by the
//! matching `tl_*_free`. Every fallible call returns a [`TlStatus`]; on
//! failure the message is kept per thread and read with
//! [`tl_last_error_message`]. Panics never cross the boundary.

#![allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use transleak::bath::BathSpec;
use transleak::cli::{run_scenario, RunOptions};
use transleak::control::{pulse_program, DriveSpec, Envelope, HoldTiming};
use transleak::dynamics::{evolve, DensityMatrix, EvolutionSpec, Method, Trajectory};
use transleak::metrics::{evaluate_not_gate, gibbs_leakage, leakage_trace};
use transleak::transmon::{TransmonModel, TransmonSpec};
use transleak::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Diverged = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlMethod {
    VonNeumann = 0,
    Lindblad = 1,
    Redfield = 2,
    Sled = 3,
    Sln = 4,
}

impl From<TlMethod> for Method {
    fn from(m: TlMethod) -> Method {
        match m {
            TlMethod::VonNeumann => Method::VonNeumann,
            TlMethod::Lindblad => Method::Lindblad,
            TlMethod::Redfield => Method::Redfield,
            TlMethod::Sled => Method::Sled,
            TlMethod::Sln => Method::Sln,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlPulse {
    SimpleNot = 0,
    Drag = 1,
}

/// Truncated transmon.
pub struct TlTransmon(TransmonModel);

/// Bath parameters.
pub struct TlBath(BathSpec);

/// Saved states of one run.
pub struct TlTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Dimension { .. } => TlStatus::InvalidArgument,
        Error::Config(_) => TlStatus::Config,
        Error::Io(_) => TlStatus::Io,
        Error::TrajectoryDiverged { .. } | Error::ResampleRate { .. } => TlStatus::Diverged,
        Error::Sweep { first, .. } => status_of(first),
        _ => TlStatus::Numerical,
    }
}

/// Run `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), TlError>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(TlError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TlStatus::Panic
        }
    }
}

struct TlError(TlStatus, String);

impl From<Error> for TlError {
    fn from(e: Error) -> Self {
        TlError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> TlError {
    TlError(TlStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, TlError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), TlError> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Copy `src` into `dst[0..len]`; fails without writing when `len` is too short.
unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), TlError> {
    if dst.is_null() {
        return Err(null("out"));
    }
    if len < src.len() {
        return Err(TlError(
            TlStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Copy the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`). Returns the full message length without the nul;
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a transmon with `n_levels` levels at `E_J/E_C = ej_over_ec` and offset charge `n_g`.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`tl_transmon_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_transmon_new(
    ej_over_ec: f64,
    n_levels: usize,
    n_g: f64,
    out: *mut *mut TlTransmon,
) -> TlStatus {
    guard(|| {
        let spec = TransmonSpec::new(ej_over_ec, n_levels).with_offset_charge(n_g);
        let model = TransmonModel::build(&spec)?;
        write(out, Box::into_raw(Box::new(TlTransmon(model))), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from [`tl_transmon_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_transmon_free(t: *mut TlTransmon) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_transmon_n_levels(t: *const TlTransmon, out: *mut usize) -> TlStatus {
    guard(|| write(out, deref(t, "transmon")?.0.n_levels(), "out"))
}

/// Eigenfrequencies in units of `omega_01` into `out[0..n_levels]`.
///
/// # Safety
/// `t` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_transmon_frequencies(t: *const TlTransmon, out: *mut f64, len: usize) -> TlStatus {
    guard(|| copy_out(&deref(t, "transmon")?.0.omega, out, len))
}

/// # Safety
/// `t` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_transmon_anharmonicity(t: *const TlTransmon, out: *mut f64) -> TlStatus {
    guard(|| write(out, deref(t, "transmon")?.0.anharmonicity, "out"))
}

/// Thermal population outside the qubit subspace at inverse temperature `beta`.
///
/// # Safety
/// `t` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_gibbs_leakage(t: *const TlTransmon, beta: f64, out: *mut f64) -> TlStatus {
    guard(|| {
        if !(beta > 0.0) {
            return Err(TlError(TlStatus::InvalidArgument, "beta must be positive".into()));
        }
        write(out, gibbs_leakage(&deref(t, "transmon")?.0, beta), "out")
    })
}

/// Ohmic bath with Drude-type cutoff; all quantities in units of `omega_01`.
///
/// # Safety
/// `out` must be valid; release with [`tl_bath_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_bath_new(kappa: f64, beta: f64, cutoff: f64, out: *mut *mut TlBath) -> TlStatus {
    guard(|| {
        let bath = BathSpec::new(kappa, beta, cutoff);
        bath.validate()?;
        write(out, Box::into_raw(Box::new(TlBath(bath))), "out")
    })
}

/// # Safety
/// `b` must be null or a handle from [`tl_bath_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_bath_free(b: *mut TlBath) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Bath correlation function `C(t)`.
///
/// # Safety
/// `b` must be a live handle, `re` and `im` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_bath_correlation(b: *const TlBath, t: f64, re: *mut f64, im: *mut f64) -> TlStatus {
    guard(|| {
        let (r, i) = deref(b, "bath")?.0.correlation_at(t)?;
        write(re, r, "re")?;
        write(im, i, "im")
    })
}

/// Undriven evolution from the energy eigenstate `initial_level`.
///
/// # Safety
/// `t` and `b` must be live handles and `out` valid; release the result with
/// [`tl_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_evolve(
    t: *const TlTransmon,
    b: *const TlBath,
    method: TlMethod,
    initial_level: usize,
    t_final: f64,
    dt: f64,
    n_trajectories: usize,
    master_seed: u64,
    save_every: usize,
    out: *mut *mut TlTrajectory,
) -> TlStatus {
    guard(|| {
        let model = &deref(t, "transmon")?.0;
        let bath = &deref(b, "bath")?.0;
        if initial_level >= model.n_levels() {
            return Err(TlError(TlStatus::InvalidArgument, "initial_level out of range".into()));
        }
        let spec = EvolutionSpec::new(method.into(), t_final, dt)
            .with_trajectories(n_trajectories, master_seed)
            .with_save_every(save_every);
        let rho0 = DensityMatrix::basis_state(model.n_levels(), initial_level);
        let traj = evolve(model, bath, None, &rho0, &spec)?;
        write(out, Box::into_raw(Box::new(TlTrajectory(traj))), "out")
    })
}

/// # Safety
/// `tr` must be null or a handle from [`tl_evolve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_trajectory_free(tr: *mut TlTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of saved time points.
///
/// # Safety
/// `tr` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_trajectory_len(tr: *const TlTrajectory, out: *mut usize) -> TlStatus {
    guard(|| write(out, deref(tr, "trajectory")?.0.len(), "out"))
}

/// # Safety
/// `tr` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_trajectory_times(tr: *const TlTrajectory, out: *mut f64, len: usize) -> TlStatus {
    guard(|| copy_out(&deref(tr, "trajectory")?.0.times, out, len))
}

/// Population of `level` at every saved time.
///
/// # Safety
/// `tr` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_trajectory_population(
    tr: *const TlTrajectory,
    level: usize,
    out: *mut f64,
    len: usize,
) -> TlStatus {
    guard(|| {
        let traj = &deref(tr, "trajectory")?.0;
        if level >= traj.dim() {
            return Err(TlError(TlStatus::InvalidArgument, "level out of range".into()));
        }
        copy_out(&traj.population(level), out, len)
    })
}

/// Standard error of the population of `level`; zeros for deterministic methods.
///
/// # Safety
/// `tr` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_trajectory_population_stderr(
    tr: *const TlTrajectory,
    level: usize,
    out: *mut f64,
    len: usize,
) -> TlStatus {
    guard(|| {
        let traj = &deref(tr, "trajectory")?.0;
        if level >= traj.dim() {
            return Err(TlError(TlStatus::InvalidArgument, "level out of range".into()));
        }
        let se = traj.population_stderr(level).unwrap_or_else(|| vec![0.0; traj.len()]);
        copy_out(&se, out, len)
    })
}

/// Largest leakage along the trajectory and the time it occurs.
///
/// # Safety
/// `tr` must be a live handle, `l_max` and `t_max` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_trajectory_max_leakage(
    tr: *const TlTrajectory,
    l_max: *mut f64,
    t_max: *mut f64,
) -> TlStatus {
    guard(|| {
        let lt = leakage_trace(&deref(tr, "trajectory")?.0);
        write(l_max, lt.l_max, "l_max")?;
        write(t_max, lt.t_max, "t_max")
    })
}

/// Average fidelity and leakage of a resonant NOT pulse of amplitude `omega`
/// and gate time `t_g` (simple pulses use ramps of `t_g / 20`).
///
/// # Safety
/// `t` and `b` must be live handles, `fidelity` and `leakage` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_not_gate(
    t: *const TlTransmon,
    b: *const TlBath,
    method: TlMethod,
    pulse: TlPulse,
    omega: f64,
    t_g: f64,
    dt: f64,
    fidelity: *mut f64,
    leakage: *mut f64,
) -> TlStatus {
    guard(|| {
        let model = &deref(t, "transmon")?.0;
        let bath = &deref(b, "bath")?.0;
        let envelope = match pulse {
            TlPulse::SimpleNot => Envelope::SimpleNot {
                t_g,
                t_r: t_g / 20.0,
                timing: HoldTiming::Literal,
            },
            TlPulse::Drag => Envelope::Drag { t_g },
        };
        let drive = DriveSpec {
            amplitude: omega,
            carrier: model.omega01(),
            envelope,
        };
        let program = pulse_program(model, &drive, t_g)?;
        let res = evaluate_not_gate(model, bath, method.into(), &program, dt)?;
        write(fidelity, res.fidelity, "fidelity")?;
        write(leakage, res.avg_leakage, "leakage")
    })
}

/// Run a scenario file. `out_dir` may be null to use the scenario's own
/// setting. `passed` (may be null) receives 1 or 0 for experiments with a
/// tolerance verdict and -1 otherwise.
///
/// # Safety
/// `path` must be a nul-terminated string, `out_dir` null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn tl_run_scenario(path: *const c_char, out_dir: *const c_char, passed: *mut i32) -> TlStatus {
    guard(|| {
        let to_path = |p: *const c_char| -> Result<PathBuf, TlError> {
            CStr::from_ptr(p)
                .to_str()
                .map(PathBuf::from)
                .map_err(|_| TlError(TlStatus::InvalidArgument, "path is not UTF-8".into()))
        };
        if path.is_null() {
            return Err(null("path"));
        }
        let opts = RunOptions {
            out: if out_dir.is_null() {
                None
            } else {
                Some(to_path(out_dir)?)
            },
            seed: None,
            threads: None,
        };
        let report = run_scenario(&to_path(path)?, &opts)?;
        if !passed.is_null() {
            passed.write(report.passed.map_or(-1, i32::from));
        }
        Ok(())
    })
}
