//! C interface to `mprsel`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or by a
//! fitting call and released with the matching `*_free`. Every fallible
//! function returns an `MprStatus` code; on failure a description is
//! available from `mpr_last_error_message` on the same thread.
//!
//! Matrices are passed row-major, one row per subject, without an intercept
//! column. Coefficient vectors are laid out as
//! `(beta_0, ..., beta_p, alpha_0, ..., alpha_q)`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mprsel::diagnostics::{kaplan_meier, weibull_check_points};
use mprsel::selection::{select_and_fit, DEConfig, SelectionResult};
use mprsel::{Error, PenaltyFamily, PenaltySpec, SolverConfig, SurvivalDataset, TuningMode};
use nalgebra::DMatrix;

pub type MprStatus = i32;

pub const MPR_OK: MprStatus = 0;
pub const MPR_ERR_NULL_POINTER: MprStatus = 1;
/// Invalid settings or arguments.
pub const MPR_ERR_CONFIG: MprStatus = 2;
/// Data rejected by validation.
pub const MPR_ERR_DATA: MprStatus = 3;
/// Singular system, non-convergence or non-finite arithmetic.
pub const MPR_ERR_NUMERICAL: MprStatus = 4;
/// Output buffer shorter than required.
pub const MPR_ERR_BUFFER_TOO_SMALL: MprStatus = 5;
/// A Rust panic was caught at the boundary.
pub const MPR_ERR_INTERNAL: MprStatus = 6;

pub const MPR_PENALTY_NONE: i32 = 0;
pub const MPR_PENALTY_LASSO: i32 = 1;
pub const MPR_PENALTY_SCAD: i32 = 2;
pub const MPR_PENALTY_ALASSO: i32 = 3;

pub const MPR_TUNING_SINGLE: i32 = 0;
pub const MPR_TUNING_SINGLE_ADAPTIVE: i32 = 1;
pub const MPR_TUNING_SEPARATE: i32 = 2;
pub const MPR_TUNING_SEPARATE_ADAPTIVE: i32 = 3;

/// Validated survival dataset.
pub struct MprDataset {
    inner: SurvivalDataset,
}

/// Result of a fit or a tuning-parameter selection.
pub struct MprFit {
    inner: SelectionResult,
}

/// Settings for `mpr_select`. Obtain defaults from
/// `mpr_select_options_default` and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MprSelectOptions {
    /// One of the `MPR_PENALTY_*` constants.
    pub penalty: i32,
    /// One of the `MPR_TUNING_*` constants, or -1 to derive it from the
    /// penalty with a single tuning scalar.
    pub tuning: i32,
    pub scad_a: f64,
    pub epsilon: f64,
    pub zero_tol: f64,
    pub max_iter: u32,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// 0 selects ten members per tuning scalar.
    pub de_population: u32,
    pub de_generations: u32,
    pub de_f: f64,
    pub de_cr: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> MprStatus {
    if e.is_config() {
        MPR_ERR_CONFIG
    } else if e.is_numerical() {
        MPR_ERR_NUMERICAL
    } else {
        MPR_ERR_DATA
    }
}

fn fail(status: MprStatus, message: impl Into<String>) -> MprStatus {
    set_error(message.into());
    status
}

fn fail_with(e: Error) -> MprStatus {
    fail(status_of(&e), format!("{}: {e}", e.code()))
}

/// Runs `body`, converting panics into `MPR_ERR_INTERNAL`.
fn guard(body: impl FnOnce() -> MprStatus) -> MprStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(MPR_ERR_INTERNAL, "internal error: panic caught at the C boundary"),
    }
}

unsafe fn input_slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> MprStatus {
    if out.is_null() {
        return fail(MPR_ERR_NULL_POINTER, "output buffer is null");
    }
    if len < src.len() {
        return fail(MPR_ERR_BUFFER_TOO_SMALL, format!("buffer holds {len} values, {} required", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    MPR_OK
}

/// Message describing the most recent failure on this thread, or null. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn mpr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mpr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from `n` subjects with `p` scale and `q` shape
/// covariates. `status` holds 1 for an event and 0 for censoring.
///
/// # Safety
/// `time` and `status` must point to `n` values, `x` to `n * p` values and
/// `z` to `n * q` values (either may be null when its width is 0); `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpr_dataset_new(
    time: *const f64,
    status: *const f64,
    n: usize,
    x: *const f64,
    p: usize,
    z: *const f64,
    q: usize,
    out: *mut *mut MprDataset,
) -> MprStatus {
    guard(|| {
        if out.is_null() {
            return fail(MPR_ERR_NULL_POINTER, "out is null");
        }
        *out = ptr::null_mut();
        let (Some(t), Some(d)) = (input_slice(time, n), input_slice(status, n)) else {
            return fail(MPR_ERR_NULL_POINTER, "time or status is null");
        };
        let (Some(xs), Some(zs)) = (input_slice(x, n * p), input_slice(z, n * q)) else {
            return fail(MPR_ERR_NULL_POINTER, "covariate matrix is null");
        };
        let xm = DMatrix::from_row_slice(n, p, xs);
        let zm = DMatrix::from_row_slice(n, q, zs);
        match SurvivalDataset::from_covariates(t.to_vec(), d.to_vec(), &xm, &zm) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MprDataset { inner }));
                MPR_OK
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `dataset` must be null or a handle from `mpr_dataset_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpr_dataset_free(dataset: *mut MprDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of subjects, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_dataset_n(dataset: *const MprDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n())
}

/// Number of observed events, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_dataset_n_events(dataset: *const MprDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_events())
}

#[no_mangle]
pub extern "C" fn mpr_select_options_default() -> MprSelectOptions {
    let de = DEConfig::default();
    let solver = SolverConfig::default();
    MprSelectOptions {
        penalty: MPR_PENALTY_ALASSO,
        tuning: -1,
        scad_a: mprsel::penalty::DEFAULT_SCAD_A,
        epsilon: mprsel::penalty::DEFAULT_EPSILON,
        zero_tol: solver.zero_tol,
        max_iter: solver.max_iter as u32,
        lambda_lo: de.bounds.0,
        lambda_hi: de.bounds.1,
        de_population: 0,
        de_generations: de.generations_max as u32,
        de_f: de.f,
        de_cr: de.cr,
        seed: de.seed,
    }
}

fn family_of(code: i32) -> Option<PenaltyFamily> {
    match code {
        MPR_PENALTY_NONE => Some(PenaltyFamily::None),
        MPR_PENALTY_LASSO => Some(PenaltyFamily::Lasso),
        MPR_PENALTY_SCAD => Some(PenaltyFamily::Scad),
        MPR_PENALTY_ALASSO => Some(PenaltyFamily::Alasso),
        _ => None,
    }
}

fn tuning_of(code: i32, family: PenaltyFamily) -> Option<TuningMode> {
    match code {
        -1 => Some(TuningMode::for_family(family, false)),
        MPR_TUNING_SINGLE => Some(TuningMode::Single),
        MPR_TUNING_SINGLE_ADAPTIVE => Some(TuningMode::SingleAdaptive),
        MPR_TUNING_SEPARATE => Some(TuningMode::SeparateNonAdaptive),
        MPR_TUNING_SEPARATE_ADAPTIVE => Some(TuningMode::SeparateAdaptive),
        _ => None,
    }
}

fn settings(opts: &MprSelectOptions) -> Result<(PenaltySpec, SolverConfig, DEConfig), MprStatus> {
    let family = family_of(opts.penalty)
        .ok_or_else(|| fail(MPR_ERR_CONFIG, format!("unknown penalty code {}", opts.penalty)))?;
    let tuning = tuning_of(opts.tuning, family)
        .ok_or_else(|| fail(MPR_ERR_CONFIG, format!("unknown tuning code {}", opts.tuning)))?;
    let mut spec = PenaltySpec::new(family, tuning);
    spec.scad_a = opts.scad_a;
    spec.epsilon = opts.epsilon;
    let solver = SolverConfig { zero_tol: opts.zero_tol, max_iter: opts.max_iter as usize, ..SolverConfig::default() };
    let de = DEConfig {
        population_size: (opts.de_population > 0).then_some(opts.de_population as usize),
        generations_max: opts.de_generations as usize,
        f: opts.de_f,
        cr: opts.de_cr,
        bounds: (opts.lambda_lo, opts.lambda_hi),
        seed: opts.seed,
        ..DEConfig::default()
    };
    Ok((spec, solver, de))
}

unsafe fn run_selection(
    dataset: *const MprDataset,
    spec: &PenaltySpec,
    solver: &SolverConfig,
    de: &DEConfig,
    out: *mut *mut MprFit,
) -> MprStatus {
    if out.is_null() {
        return fail(MPR_ERR_NULL_POINTER, "out is null");
    }
    *out = ptr::null_mut();
    let Some(data) = dataset.as_ref() else {
        return fail(MPR_ERR_NULL_POINTER, "dataset is null");
    };
    match select_and_fit(&data.inner, spec, solver, de) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(MprFit { inner }));
            MPR_OK
        }
        Err(e) => fail_with(e),
    }
}

/// Unpenalized maximum-likelihood fit (on standardized covariates, reported
/// on the original scale).
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_unpenalized(dataset: *const MprDataset, out: *mut *mut MprFit) -> MprStatus {
    guard(|| run_selection(dataset, &PenaltySpec::none(), &SolverConfig::default(), &DEConfig::default(), out))
}

/// Penalized fit with the tuning scalar(s) chosen by minimizing BIC.
///
/// # Safety
/// `dataset` must be a live handle, `options` null (defaults) or valid, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpr_select(
    dataset: *const MprDataset,
    options: *const MprSelectOptions,
    out: *mut *mut MprFit,
) -> MprStatus {
    guard(|| {
        let opts = options.as_ref().copied().unwrap_or_else(|| mpr_select_options_default());
        match settings(&opts) {
            Ok((spec, solver, de)) => run_selection(dataset, &spec, &solver, &de, out),
            Err(status) => status,
        }
    })
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_free(fit: *mut MprFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Length of the coefficient vector, `(p + 1) + (q + 1)`, or 0 for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_n_coefficients(fit: *const MprFit) -> usize {
    fit.as_ref().map_or(0, |f| f.inner.theta_original.len())
}

/// Number of scale coefficients, intercept included, or 0 for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_n_scale(fit: *const MprFit) -> usize {
    fit.as_ref().map_or(0, |f| f.inner.theta_original.beta.len())
}

/// Copies coefficients on the original covariate scale.
///
/// # Safety
/// `fit` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_coefficients(fit: *const MprFit, out: *mut f64, len: usize) -> MprStatus {
    guard(|| match fit.as_ref() {
        Some(f) => copy_out(f.inner.theta_original.to_flat().as_slice(), out, len),
        None => fail(MPR_ERR_NULL_POINTER, "fit is null"),
    })
}

/// Copies coefficients on the standardized covariate scale.
///
/// # Safety
/// `fit` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_coefficients_standardized(fit: *const MprFit, out: *mut f64, len: usize) -> MprStatus {
    guard(|| match fit.as_ref() {
        Some(f) => copy_out(f.inner.fit.theta_hat.to_flat().as_slice(), out, len),
        None => fail(MPR_ERR_NULL_POINTER, "fit is null"),
    })
}

/// Copies sandwich standard errors on the original scale.
///
/// # Safety
/// `fit` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_std_errors(fit: *const MprFit, out: *mut f64, len: usize) -> MprStatus {
    guard(|| match fit.as_ref() {
        Some(f) => match f.inner.standard_errors_original() {
            Some(se) => copy_out(&se, out, len),
            None => fail(MPR_ERR_NUMERICAL, "covariance unavailable: information matrix is singular"),
        },
        None => fail(MPR_ERR_NULL_POINTER, "fit is null"),
    })
}

/// Copies the selection mask (1 = nonzero) into `out`.
///
/// # Safety
/// `fit` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_selected(fit: *const MprFit, out: *mut u8, len: usize) -> MprStatus {
    guard(|| match fit.as_ref() {
        Some(f) => {
            let mask: Vec<u8> = f.inner.fit.selected_mask.iter().map(|&b| b as u8).collect();
            copy_out(&mask, out, len)
        }
        None => fail(MPR_ERR_NULL_POINTER, "fit is null"),
    })
}

/// Copies the chosen tuning scalar(s); `*written` receives their count (1 or 2).
///
/// # Safety
/// `fit` must be a live handle, `out` must hold `len` values and `written`
/// must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_lambda(
    fit: *const MprFit,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> MprStatus {
    guard(|| match fit.as_ref() {
        Some(f) => {
            let status = copy_out(&f.inner.lambda_star, out, len);
            if status == MPR_OK && !written.is_null() {
                *written = f.inner.lambda_star.len();
            }
            status
        }
        None => fail(MPR_ERR_NULL_POINTER, "fit is null"),
    })
}

/// Unpenalized log-likelihood at the estimate; NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_loglik(fit: *const MprFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.inner.fit.loglik)
}

/// BIC at the chosen tuning values; NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_bic(fit: *const MprFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.inner.bic_star)
}

/// Effective degrees of freedom `tr(I_lambda^-1 I_0)`; NaN when unavailable.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_effective_df(fit: *const MprFit) -> f64 {
    fit.as_ref().and_then(|f| f.inner.fit.effective_df).unwrap_or(f64::NAN)
}

/// 1 if the final Newton iteration converged, 0 otherwise or for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_fit_converged(fit: *const MprFit) -> i32 {
    fit.as_ref().is_some_and(|f| f.inner.fit.converged) as i32
}

/// Kaplan-Meier log cumulative hazard check: least-squares line of
/// `log H(t)` on `log t`. A slope near the Weibull shape and `r_squared`
/// near 1 support a Weibull baseline.
///
/// # Safety
/// `time` and `status` must point to `n` values; the output pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn mpr_weibull_check(
    time: *const f64,
    status: *const f64,
    n: usize,
    slope: *mut f64,
    intercept: *mut f64,
    r_squared: *mut f64,
) -> MprStatus {
    guard(|| {
        let (Some(t), Some(d)) = (input_slice(time, n), input_slice(status, n)) else {
            return fail(MPR_ERR_NULL_POINTER, "time or status is null");
        };
        if slope.is_null() || intercept.is_null() || r_squared.is_null() {
            return fail(MPR_ERR_NULL_POINTER, "output pointer is null");
        }
        match kaplan_meier(t, d).and_then(|c| weibull_check_points(&c)) {
            Ok(w) => {
                *slope = w.slope;
                *intercept = w.intercept;
                *r_squared = w.r_squared;
                MPR_OK
            }
            Err(e) => fail_with(e),
        }
    })
}
