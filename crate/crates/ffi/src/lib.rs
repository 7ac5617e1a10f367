//! C interface to `clfstab`.
//!
//! Systems and trajectories are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible entry point
//! returns a [`ClfstabStatus`]; on failure the message is available from
//! [`clfstab_last_error`] on the calling thread. Panics never cross the
//! boundary.
//!
//! Array arguments are `(pointer, length)` pairs. Output arrays must hold the
//! stated number of elements, otherwise `CLFSTAB_STATUS_BUFFER_TOO_SMALL` is
//! returned and nothing is written.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString, OsString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clfstab::config::{catalog, RunConfig};
use clfstab::transforms::{control_to_extended, extended_dynamics, extended_to_control, rescaled_dynamics};
use clfstab::{ControlPolynomialSystem, Error, ExtendedControl, Status, TrajectoryRecord};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClfstabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    BufferTooSmall = 3,
    Config = 4,
    /// Argument outside the domain of the operation: wrong dimension,
    /// non-finite value, control outside the cone, malformed extended control.
    Domain = 5,
    Precondition = 6,
    Certification = 7,
    Io = 8,
    Panic = 9,
}

/// How a simulation ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClfstabRunStatus {
    HorizonEnd = 0,
    TargetReached = 1,
    BlowUp = 2,
}

/// A control-polynomial system.
pub struct ClfstabSystem(ControlPolynomialSystem);

/// A recorded sample-and-hold trajectory.
pub struct ClfstabTrajectory(TrajectoryRecord);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(ClfstabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) | Error::Expression(_) => ClfstabStatus::Config,
            Error::Precondition(_) | Error::NotStrict | Error::EmptyGrid | Error::WindowExhausted(_) => {
                ClfstabStatus::Precondition
            }
            Error::Certification(_) | Error::DecayFailure { .. } => ClfstabStatus::Certification,
            Error::Io(_) => ClfstabStatus::Io,
            _ => ClfstabStatus::Domain,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ClfstabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClfstabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ClfstabStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ClfstabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ClfstabStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    match (p.is_null(), len) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(null(what)),
        (false, _) => Ok(std::slice::from_raw_parts(p, len)),
    }
}

unsafe fn write_out(src: &[f64], out: *mut f64, cap: usize, what: &str) -> Result<(), Fail> {
    if cap < src.len() {
        return Err(Fail(
            ClfstabStatus::BufferTooSmall,
            format!("{what} needs {} elements, got {cap}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn clfstab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Looks up a system by catalog name, e.g. `"cubic-damped"`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_system_from_catalog(name: *const c_char, out: *mut *mut ClfstabSystem) -> ClfstabStatus {
    guard(|| {
        let name = as_str(name, "name")?;
        let sys = catalog(name).ok_or_else(|| Fail(ClfstabStatus::Config, format!("unknown catalog system {name:?}")))?;
        put(out, Box::into_raw(Box::new(ClfstabSystem(sys))), "out")
    })
}

/// Builds the system of a JSON run configuration (only `system` is used).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_system_from_config(
    config_json: *const c_char,
    out: *mut *mut ClfstabSystem,
) -> ClfstabStatus {
    guard(|| {
        let cfg = RunConfig::from_json_str(as_str(config_json, "config_json")?, &[])?;
        let sys = cfg.build_system()?;
        put(out, Box::into_raw(Box::new(ClfstabSystem(sys))), "out")
    })
}

/// # Safety
/// `sys` must come from a `clfstab_system_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn clfstab_system_free(sys: *mut ClfstabSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// State dimension `n`, control dimension `m` and control degree `d`.
///
/// # Safety
/// `sys` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_system_dims(
    sys: *const ClfstabSystem,
    n: *mut usize,
    m: *mut usize,
    d: *mut u32,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        put(n, s.state_dim(), "n")?;
        put(m, s.control_dim(), "m")?;
        put(d, s.degree(), "d")
    })
}

/// Distance from `x` to the target.
///
/// # Safety
/// `sys` must be a live handle; `x` must hold `x_len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_system_distance(
    sys: *const ClfstabSystem,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        let x = as_slice(x, x_len, "x")?;
        if x.len() != s.state_dim() {
            return Err(Error::Dimension {
                what: "x",
                expected: s.state_dim(),
                got: x.len(),
            }
            .into());
        }
        put(out, s.distance(x), "out")
    })
}

/// `f(x, u)`, written to `out[0..n]`.
///
/// # Safety
/// `sys` must be a live handle; `x`, `u` and `out` must hold the given counts.
#[no_mangle]
pub unsafe extern "C" fn clfstab_eval_dynamics(
    sys: *const ClfstabSystem,
    x: *const f64,
    x_len: usize,
    u: *const f64,
    u_len: usize,
    out: *mut f64,
    out_len: usize,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        let v = s.eval_dynamics(as_slice(x, x_len, "x")?, as_slice(u, u_len, "u")?)?;
        write_out(&v, out, out_len, "out")
    })
}

/// Rescaled dynamics `f(x, u) / (1 + nu(|u|))`, written to `out[0..n]`.
///
/// # Safety
/// As for [`clfstab_eval_dynamics`].
#[no_mangle]
pub unsafe extern "C" fn clfstab_rescaled_dynamics(
    sys: *const ClfstabSystem,
    x: *const f64,
    x_len: usize,
    u: *const f64,
    u_len: usize,
    out: *mut f64,
    out_len: usize,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        let v = rescaled_dynamics(s, as_slice(x, x_len, "x")?, as_slice(u, u_len, "u")?)?;
        write_out(&v, out, out_len, "out")
    })
}

/// Extended dynamics `F(x, w0, w)` with `w0 + |w| = 1`, written to `out[0..n]`.
///
/// # Safety
/// As for [`clfstab_eval_dynamics`], with `w` holding `w_len` values.
#[no_mangle]
pub unsafe extern "C" fn clfstab_extended_dynamics(
    sys: *const ClfstabSystem,
    x: *const f64,
    x_len: usize,
    w0: f64,
    w: *const f64,
    w_len: usize,
    out: *mut f64,
    out_len: usize,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        let wc = ExtendedControl::new(w0, as_slice(w, w_len, "w")?.to_vec())?;
        let v = extended_dynamics(s, as_slice(x, x_len, "x")?, &wc)?;
        write_out(&v, out, out_len, "out")
    })
}

/// Maps an original control `u` to the simplex point `(w0, w)`.
///
/// # Safety
/// `u` holds `u_len` values, `w` has room for `w_len >= u_len`; `w0` writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_control_to_extended(
    sys: *const ClfstabSystem,
    u: *const f64,
    u_len: usize,
    w0: *mut f64,
    w: *mut f64,
    w_len: usize,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        let wc = control_to_extended(&s.growth(), as_slice(u, u_len, "u")?)?;
        write_out(wc.w(), w, w_len, "w")?;
        put(w0, wc.w0(), "w0")
    })
}

/// Maps a simplex point with `w0 > 0` back to the original control.
///
/// # Safety
/// `w` holds `w_len` values, `u` has room for `u_len >= w_len`.
#[no_mangle]
pub unsafe extern "C" fn clfstab_extended_to_control(
    sys: *const ClfstabSystem,
    w0: f64,
    w: *const f64,
    w_len: usize,
    u: *mut f64,
    u_len: usize,
) -> ClfstabStatus {
    guard(|| {
        let s = &as_ref(sys, "sys")?.0;
        let wc = ExtendedControl::new(w0, as_slice(w, w_len, "w")?.to_vec())?;
        let v = extended_to_control(&s.growth(), &wc)?;
        write_out(&v, u, u_len, "u")
    })
}

/// Runs the `simulate` block of a JSON run configuration.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_simulate(
    config_json: *const c_char,
    out: *mut *mut ClfstabTrajectory,
) -> ClfstabStatus {
    guard(|| {
        let cfg = RunConfig::from_json_str(as_str(config_json, "config_json")?, &[])?;
        let rec = cfg.run_simulation()?;
        put(out, Box::into_raw(Box::new(ClfstabTrajectory(rec))), "out")
    })
}

/// # Safety
/// `traj` must come from [`clfstab_simulate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_free(traj: *mut ClfstabTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded samples and the state dimension.
///
/// # Safety
/// `traj` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_shape(
    traj: *const ClfstabTrajectory,
    samples: *mut usize,
    state_dim: *mut usize,
) -> ClfstabStatus {
    guard(|| {
        let r = &as_ref(traj, "traj")?.0;
        put(samples, r.len(), "samples")?;
        put(state_dim, r.states.first().map_or(0, Vec::len), "state_dim")
    })
}

/// Sample times, one per sample.
///
/// # Safety
/// `traj` must be a live handle; `out` has room for `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_times(
    traj: *const ClfstabTrajectory,
    out: *mut f64,
    out_len: usize,
) -> ClfstabStatus {
    guard(|| write_out(&as_ref(traj, "traj")?.0.times, out, out_len, "out"))
}

/// Distances to the target, one per sample.
///
/// # Safety
/// As for [`clfstab_trajectory_times`].
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_distances(
    traj: *const ClfstabTrajectory,
    out: *mut f64,
    out_len: usize,
) -> ClfstabStatus {
    guard(|| write_out(&as_ref(traj, "traj")?.0.distances, out, out_len, "out"))
}

/// States in row-major order (`samples * state_dim` values).
///
/// # Safety
/// As for [`clfstab_trajectory_times`].
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_states(
    traj: *const ClfstabTrajectory,
    out: *mut f64,
    out_len: usize,
) -> ClfstabStatus {
    guard(|| {
        let flat: Vec<f64> = as_ref(traj, "traj")?.0.states.concat();
        write_out(&flat, out, out_len, "out")
    })
}

/// Termination kind and, for `TargetReached` and `BlowUp`, its time (the
/// final time otherwise).
///
/// # Safety
/// `traj` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_status(
    traj: *const ClfstabTrajectory,
    status: *mut ClfstabRunStatus,
    time: *mut f64,
) -> ClfstabStatus {
    guard(|| {
        let r = &as_ref(traj, "traj")?.0;
        let (s, t) = match r.status {
            Status::HorizonEnd => (ClfstabRunStatus::HorizonEnd, r.final_time()),
            Status::TargetReached(t) => (ClfstabRunStatus::TargetReached, t),
            Status::BlowUp(t) => (ClfstabRunStatus::BlowUp, t),
        };
        put(status, s, "status")?;
        put(time, t, "time")
    })
}

/// The trajectory CSV as a NUL-terminated string. `needed` receives the
/// buffer size including the terminator; with a too small (or null) buffer
/// only `needed` is written.
///
/// # Safety
/// `traj` must be a live handle; `buf` has room for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn clfstab_trajectory_csv(
    traj: *const ClfstabTrajectory,
    buf: *mut c_char,
    buf_len: usize,
    needed: *mut usize,
) -> ClfstabStatus {
    guard(|| {
        let csv = as_ref(traj, "traj")?.0.to_csv_string();
        let size = csv.len() + 1;
        if !needed.is_null() {
            needed.write(size);
        }
        if buf.is_null() || buf_len < size {
            return Err(Fail(ClfstabStatus::BufferTooSmall, format!("CSV needs {size} bytes, got {buf_len}")));
        }
        ptr::copy_nonoverlapping(csv.as_ptr().cast::<c_char>(), buf, csv.len());
        buf.add(csv.len()).write(0);
        Ok(())
    })
}

/// Runs the command-line front end with `argv[0..argc]` (including the
/// program name) and returns its exit code.
///
/// # Safety
/// `argv` must hold `argc` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn clfstab_run(argc: c_int, argv: *const *const c_char) -> c_int {
    let mut args = vec![OsString::from("clfstab")];
    if argc > 0 {
        if argv.is_null() {
            set_error("argv is null".into());
            return clfstab::cli::EXIT_CONFIG;
        }
        args.clear();
        for k in 0..argc as usize {
            let a = *argv.add(k);
            if a.is_null() {
                set_error(format!("argv[{k}] is null"));
                return clfstab::cli::EXIT_CONFIG;
            }
            args.push(OsString::from(CStr::from_ptr(a).to_string_lossy().into_owned()));
        }
    }
    catch_unwind(|| clfstab::cli::run(args)).unwrap_or_else(|_| {
        set_error("panic in command".into());
        clfstab::cli::EXIT_RUNTIME
    })
}
