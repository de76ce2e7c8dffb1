//! C ABI for crackdyn.
//!
//! Scenarios and trajectories are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`CdStatus`]; on failure [`cd_last_error`] describes the problem for the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crackdyn::config::parse_scenario;
use crackdyn::korn::estimate_korn_constant;
use crackdyn::scenario::Scenario;
use crackdyn::trajectory::{discrete_wnorm, TrajectoryState};
use crackdyn::viscoelastic::{solve_fixedpoint, solve_monolithic};
use crackdyn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Rejected configuration or violated precondition.
    Config = 3,
    /// A linear or fixed-point solve did not converge.
    Solver = 4,
    /// A tensor, ordering or invariant check failed.
    Invariant = 5,
    /// Index or argument out of range.
    Argument = 6,
    Panic = 7,
}

/// A certified scenario together with the time step of its document.
pub struct CdScenario {
    scenario: Scenario,
    dt: f64,
}

pub struct CdTrajectory {
    traj: TrajectoryState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CdStatus {
    match e.exit_code() {
        2 => CdStatus::Config,
        3 => CdStatus::Solver,
        _ => CdStatus::Invariant,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CdStatus, String)>) -> CdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            CdStatus::Panic
        }
    }
}

fn lib(e: Error) -> (CdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CdStatus, String) {
    (CdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (CdStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next crackdyn call on the same thread.
#[no_mangle]
pub extern "C" fn cd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a scenario document, builds and certifies the scenario.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cd_scenario_from_config(text: *const c_char, out: *mut *mut CdScenario) -> CdStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| (CdStatus::InvalidUtf8, e.to_string()))?;
        let cfg = parse_scenario(text).map_err(lib)?;
        let scenario = cfg.scenario().map_err(lib)?;
        scenario.certify().map_err(lib)?;
        let handle = Box::new(CdScenario { scenario, dt: cfg.time.dt });
        write(out, Box::into_raw(handle), "out")
    })
}

/// # Safety
/// `sc` must come from [`cd_scenario_from_config`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cd_scenario_free(sc: *mut CdScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Time step and horizon of the scenario.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cd_scenario_time(sc: *const CdScenario, dt: *mut f64, t_end: *mut f64) -> CdStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        write(dt, sc.dt, "dt")?;
        write(t_end, sc.scenario.t_end, "t_end")
    })
}

/// Coercivity constant and Korn constant of the fully cracked space.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cd_scenario_constants(sc: *const CdScenario, alpha0: *mut f64, korn: *mut f64) -> CdStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        let cert = sc.scenario.certify().map_err(lib)?;
        write(alpha0, cert.alpha0, "alpha0")?;
        let k = estimate_korn_constant(sc.scenario.family.fully_open()).map_err(lib)?;
        write(korn, k.k, "korn")
    })
}

/// Monolithic viscoelastic solve with time step `dt` (`dt <= 0` uses the
/// document's step).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cd_solve_monolithic(sc: *const CdScenario, dt: f64, out: *mut *mut CdTrajectory) -> CdStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        let dt = if dt > 0.0 { dt } else { sc.dt };
        let traj = solve_monolithic(&sc.scenario, dt).map_err(lib)?;
        write(out, Box::into_raw(Box::new(CdTrajectory { traj })), "out")
    })
}

/// Picard solve with relative tolerance `tol` (`tol <= 0` keeps the
/// default). `iterations` receives the total Picard iteration count.
///
/// # Safety
/// Pointers must be valid; `iterations` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cd_solve_fixedpoint(
    sc: *const CdScenario,
    dt: f64,
    tol: f64,
    out: *mut *mut CdTrajectory,
    iterations: *mut usize,
) -> CdStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        let dt = if dt > 0.0 { dt } else { sc.dt };
        let mut cfg = crackdyn::viscoelastic::FixedPointConfig::default();
        if tol > 0.0 {
            cfg.tol = tol;
        }
        let (traj, report) = solve_fixedpoint(&sc.scenario, dt, &cfg).map_err(lib)?;
        if !iterations.is_null() {
            iterations.write(report.total_iterations());
        }
        write(out, Box::into_raw(Box::new(CdTrajectory { traj })), "out")
    })
}

/// # Safety
/// `traj` must come from a solve call and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_free(traj: *mut CdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of time nodes, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_len(traj: *const CdTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.nodes.len())
}

/// Time and the norms `‖u‖`, `‖Du‖`, `‖u̇‖` at node `k`, written to
/// `out[0..4]`.
///
/// # Safety
/// `out` must hold at least 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_node(traj: *const CdTrajectory, k: usize, out: *mut f64) -> CdStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.traj;
        if k >= t.nodes.len() {
            return Err((CdStatus::Argument, format!("node {k} out of range (0..{})", t.nodes.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let n = t.node_norms(k);
        let vals = [t.time(k), n.u.sqrt(), n.du.sqrt(), n.v.sqrt()];
        ptr::copy_nonoverlapping(vals.as_ptr(), out, 4);
        Ok(())
    })
}

/// Discrete `𝒲` distance between two trajectories on the same grid.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_distance(a: *const CdTrajectory, b: *const CdTrajectory, out: *mut f64) -> CdStatus {
    guard(|| {
        let a = deref(a, "a")?;
        let b = deref(b, "b")?;
        let d = discrete_wnorm(&a.traj, &b.traj).map_err(lib)?;
        write(out, d, "out")
    })
}
