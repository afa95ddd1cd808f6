//! C interface to `fracpme`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `_free` function. Every call returns a [`FracpmeStatus`] or,
//! for constructors, null on failure. The message of the last failure on the
//! calling thread is available from [`fracpme_last_error_message`].

use fracpme::bounds::{beta0, BoundsReport};
use fracpme::{shoot, Error, ProblemParams, ShootConfig, ShootingResult};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracpmeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    BelowThreshold = 3,
    NoConvergence = 4,
    BufferTooSmall = 5,
    Panic = 6,
    Internal = 7,
}

/// Problem parameters and solver settings.
pub struct FracpmeParams {
    params: ProblemParams,
    config: ShootConfig,
}

/// A converged self-similar profile.
pub struct FracpmeSolution {
    result: ShootingResult,
}

/// Closed-form bounds at one `beta`. Fields undefined below `beta0` are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracpmeBounds {
    pub beta: f64,
    pub beta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub f_plus: f64,
    pub f_minus: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> FracpmeStatus {
    match e {
        Error::Domain { .. } | Error::InvalidParams(_) | Error::InvalidProfile(_) | Error::Config(_) => {
            FracpmeStatus::InvalidParams
        }
        Error::BelowThreshold { .. } => FracpmeStatus::BelowThreshold,
        Error::NoZero { .. } | Error::NonConvergence { .. } | Error::Bracket(_) | Error::Instability { .. } => {
            FracpmeStatus::NoConvergence
        }
        _ => FracpmeStatus::Internal,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (FracpmeStatus, String)>) -> FracpmeStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FracpmeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside fracpme");
            FracpmeStatus::Panic
        }
    }
}

fn lift<T>(r: fracpme::Result<T>) -> Result<T, (FracpmeStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FracpmeStatus, String) {
    (FracpmeStatus::NullPointer, format!("{what} is null"))
}

/// New parameter handle with default solver settings, or null if `alpha` is
/// outside `(0, 1)` or `m ≤ 1`.
#[no_mangle]
pub extern "C" fn fracpme_params_new(alpha: f64, m: f64) -> *mut FracpmeParams {
    let mut out = ptr::null_mut();
    guard(|| {
        let params = lift(ProblemParams::new(alpha, m))?;
        out = Box::into_raw(Box::new(FracpmeParams {
            params,
            config: ShootConfig::default(),
        }));
        Ok(())
    });
    out
}

/// # Safety
/// `params` must be null or come from [`fracpme_params_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fracpme_params_free(params: *mut FracpmeParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Grid step of the solve; zero or negative restores the default.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_params_set_grid_step(params: *mut FracpmeParams, grid_step: f64) -> FracpmeStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let mut cfg = p.config;
        cfg.solver.grid_step = (grid_step > 0.0).then_some(grid_step);
        let bad = cfg.violations();
        if !bad.is_empty() {
            return Err((FracpmeStatus::InvalidParams, bad.join("; ")));
        }
        p.config = cfg;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_params_set_tolerances(
    params: *mut FracpmeParams,
    picard_tol: f64,
    shoot_tol: f64,
) -> FracpmeStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let mut cfg = p.config;
        cfg.solver.picard_tol = picard_tol;
        cfg.shoot_tol = shoot_tol;
        let bad = cfg.violations();
        if !bad.is_empty() {
            return Err((FracpmeStatus::InvalidParams, bad.join("; ")));
        }
        p.config = cfg;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fracpme_beta0(params: *const FracpmeParams, out: *mut f64) -> FracpmeStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = beta0(&p.params);
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fracpme_bounds(
    params: *const FracpmeParams,
    beta: f64,
    out: *mut FracpmeBounds,
) -> FracpmeStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err((FracpmeStatus::InvalidParams, format!("beta must be positive, got {beta}")));
        }
        let r = lift(BoundsReport::evaluate(beta, &p.params))?;
        *out = FracpmeBounds {
            beta: r.beta,
            beta0: r.beta0,
            eta1: r.eta1.unwrap_or(f64::NAN),
            eta2: r.eta2,
            f_plus: r.f_plus.unwrap_or(f64::NAN),
            f_minus: r.f_minus,
        };
        Ok(())
    })
}

/// Finds `beta*` and the profile. On success `*out` owns a new solution.
///
/// # Safety
/// `params` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solve(params: *const FracpmeParams, out: *mut *mut FracpmeSolution) -> FracpmeStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let result = lift(shoot(&p.params, &p.config))?;
        *out = Box::into_raw(Box::new(FracpmeSolution { result }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or come from [`fracpme_solve`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_free(solution: *mut FracpmeSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

unsafe fn field(solution: *const FracpmeSolution, f: impl Fn(&ShootingResult) -> f64) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| f(&s.result))
}

/// NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_beta_star(solution: *const FracpmeSolution) -> f64 {
    field(solution, |r| r.beta_star)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_eta_star(solution: *const FracpmeSolution) -> f64 {
    field(solution, |r| r.eta_star)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_flux_residual(solution: *const FracpmeSolution) -> f64 {
    field(solution, |r| r.flux_residual)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_beta0(solution: *const FracpmeSolution) -> f64 {
    field(solution, |r| r.beta0)
}

/// Number of profile nodes; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_len(solution: *const FracpmeSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.result.profile.len())
}

/// Copies nodes and `U` values into buffers of `len` doubles each. Either
/// buffer may be null to skip it.
///
/// # Safety
/// `solution` must be null or a live handle; non-null buffers must hold
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracpme_solution_copy_profile(
    solution: *const FracpmeSolution,
    eta: *mut f64,
    u: *mut f64,
    len: usize,
) -> FracpmeStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let prof = &s.result.profile;
        let n = prof.len();
        if len < n {
            return Err((FracpmeStatus::BufferTooSmall, format!("profile has {n} nodes, buffer holds {len}")));
        }
        if !eta.is_null() {
            let dst = std::slice::from_raw_parts_mut(eta, n);
            for (i, d) in dst.iter_mut().enumerate() {
                *d = prof.node(i);
            }
        }
        if !u.is_null() {
            std::slice::from_raw_parts_mut(u, n).copy_from_slice(prof.values());
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fracpme_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, NUL-terminated and static.
#[no_mangle]
pub extern "C" fn fracpme_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
