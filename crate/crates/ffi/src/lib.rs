//! C ABI for parallax-core.
//!
//! Every fallible function returns a [`PxStatus`] and writes its result
//! through an out-pointer. After a non-`OK` status, [`px_last_error`] holds a
//! human-readable message for the calling thread. Handles returned by the
//! `*_new` / constructor functions must be released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use parallax_core::credence::{dominance, Dominance};
use parallax_core::inference::{quadrature_posterior, tail_probability, GridConfig, PosteriorGrid};
use parallax_core::model::{melo_distance, mle_distance, Measurement};
use parallax_core::priors::log_prior_density;
use parallax_core::{Error, PriorSpec};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ImproperPosterior = 3,
    NotApplicable = 4,
    NumericalFailure = 5,
    Panic = 6,
}

/// Tail relation between two priors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxDominance {
    FirstDominates = 0,
    SecondDominates = 1,
    Equivalent = 2,
}

/// Opaque prior handle.
pub struct PxPrior(PriorSpec);

/// Opaque handle to a normalized posterior on a quadrature grid.
pub struct PxGrid(PosteriorGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PxStatus {
    match e {
        Error::Config(_) | Error::Domain { .. } | Error::InvalidGep(_) => PxStatus::InvalidArgument,
        Error::ImproperPosterior(_) => PxStatus::ImproperPosterior,
        Error::NotApplicable(_) => PxStatus::NotApplicable,
        _ => PxStatus::NumericalFailure,
    }
}

fn fail(status: PxStatus, msg: &str) -> PxStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PxStatus>) -> PxStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PxStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PxStatus::Panic, "internal panic"),
    }
}

fn check(e: Error) -> PxStatus {
    fail(status_of(&e), &e.to_string())
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, PxStatus> {
    p.as_mut().ok_or_else(|| fail(PxStatus::NullPointer, "null output pointer"))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, PxStatus> {
    p.as_ref().ok_or_else(|| fail(PxStatus::NullPointer, &format!("null {what}")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PxStatus> {
    if p.is_null() {
        return Err(fail(PxStatus::NullPointer, &format!("null {what}")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PxStatus::InvalidArgument, &format!("{what} is not UTF-8")))
}

/// Message describing the most recent failure on this thread; empty after a
/// successful call. The pointer stays valid until the next call into this
/// library from the same thread.
#[no_mangle]
pub extern "C" fn px_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a prior from a family name and `n_params` (key, value) pairs.
///
/// # Safety
/// `name` must be a NUL-terminated string. When `n_params > 0`, `keys` and
/// `values` must point to `n_params` valid entries. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_prior_new(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    n_params: usize,
    out: *mut *mut PxPrior,
) -> PxStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let name = c_str(name, "prior name")?;
        let mut params = BTreeMap::new();
        if n_params > 0 {
            if keys.is_null() || values.is_null() {
                return Err(fail(PxStatus::NullPointer, "null parameter arrays"));
            }
            let keys = std::slice::from_raw_parts(keys, n_params);
            let values = std::slice::from_raw_parts(values, n_params);
            for (&k, &v) in keys.iter().zip(values) {
                params.insert(c_str(k, "parameter key")?.to_string(), v);
            }
        }
        let spec = PriorSpec::from_params(name, &params, None).map_err(check)?;
        *out = Box::into_raw(Box::new(PxPrior(spec)));
        Ok(())
    })
}

/// Releases a prior; null is ignored.
///
/// # Safety
/// `prior` must come from [`px_prior_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn px_prior_free(prior: *mut PxPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

/// Natural log of the normalized prior density at distance `r`.
///
/// # Safety
/// `prior` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_log_prior_density(prior: *const PxPrior, r: f64, out: *mut f64) -> PxStatus {
    guard(|| {
        let prior = in_ref(prior, "prior")?;
        let out = out_ref(out)?;
        *out = log_prior_density(&prior.0, r).map_err(check)?;
        Ok(())
    })
}

/// Builds the normalized posterior of distance for parallax `omega` with
/// standard error `sigma_omega` (both in arcseconds).
///
/// # Safety
/// `prior` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_posterior_quadrature(
    prior: *const PxPrior,
    omega: f64,
    sigma_omega: f64,
    out: *mut *mut PxGrid,
) -> PxStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let prior = in_ref(prior, "prior")?;
        let m = Measurement::new(omega, sigma_omega).map_err(check)?;
        let g = quadrature_posterior(&prior.0, &m, &GridConfig::default()).map_err(check)?;
        *out = Box::into_raw(Box::new(PxGrid(g)));
        Ok(())
    })
}

/// Posterior distance quantile at probability `p` in (0, 1).
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_grid_quantile(grid: *const PxGrid, p: f64, out: *mut f64) -> PxStatus {
    guard(|| {
        let grid = in_ref(grid, "grid")?;
        let out = out_ref(out)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(fail(PxStatus::InvalidArgument, &format!("probability {p} outside (0, 1)")));
        }
        *out = grid.0.quantile(p);
        Ok(())
    })
}

/// Posterior probability that the distance exceeds `c`.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_grid_tail_probability(grid: *const PxGrid, c: f64, out: *mut f64) -> PxStatus {
    guard(|| {
        let grid = in_ref(grid, "grid")?;
        let out = out_ref(out)?;
        if !(c > 0.0) {
            return Err(fail(PxStatus::InvalidArgument, &format!("threshold {c} must be positive")));
        }
        *out = tail_probability(&grid.0, c);
        Ok(())
    })
}

/// Releases a posterior grid; null is ignored.
///
/// # Safety
/// `grid` must come from [`px_posterior_quadrature`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn px_grid_free(grid: *mut PxGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Inverse-parallax distance; `PX_STATUS_NOT_APPLICABLE` when `omega <= 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_mle_distance(omega: f64, sigma_omega: f64, out: *mut f64) -> PxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let m = Measurement::new(omega, sigma_omega).map_err(check)?;
        *out = mle_distance(&m).ok_or_else(|| fail(PxStatus::NotApplicable, "parallax is not positive"))?;
        Ok(())
    })
}

/// Minimum expected loss distance `omega / (omega^2 + sigma_omega^2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_melo_distance(omega: f64, sigma_omega: f64, out: *mut f64) -> PxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let m = Measurement::new(omega, sigma_omega).map_err(check)?;
        *out = melo_distance(&m);
        Ok(())
    })
}

/// Tail dominance between two priors.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_dominance(
    first: *const PxPrior,
    second: *const PxPrior,
    out: *mut PxDominance,
) -> PxStatus {
    guard(|| {
        let a = in_ref(first, "first prior")?;
        let b = in_ref(second, "second prior")?;
        let out = out_ref(out)?;
        *out = match dominance(&a.0.tail_metadata().pcred, &b.0.tail_metadata().pcred) {
            Dominance::FirstDominates => PxDominance::FirstDominates,
            Dominance::SecondDominates => PxDominance::SecondDominates,
            Dominance::Equivalent => PxDominance::Equivalent,
        };
        Ok(())
    })
}
