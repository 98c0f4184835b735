use std::ffi::CStr;
use std::ptr;

use mprsel::{select_and_fit, DEConfig, PenaltySpec, SolverConfig, SurvivalDataset};
use mprsel_ffi::*;
use nalgebra::DMatrix;
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Raw {
    time: Vec<f64>,
    status: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    n: usize,
    p: usize,
    q: usize,
}

// Weibull data with one active scale and one active shape covariate.
fn raw(n: usize, seed: u64) -> Raw {
    let (p, q) = (3, 2);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut time = Vec::new();
    let mut status = Vec::new();
    let mut x = Vec::new();
    let mut z = Vec::new();
    for _ in 0..n {
        let xi: Vec<f64> = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
        let zi: Vec<f64> = (0..q).map(|_| rng.random_range(-1.5..1.5)).collect();
        let tau = (0.3 + 0.8 * xi[0]).exp();
        let gamma = (0.2 - 0.4 * zi[0]).exp();
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let t = (-u.ln() / tau).powf(1.0 / gamma);
        let c = -rng.random_range(f64::EPSILON..1.0f64).ln() * 4.0;
        time.push(t.min(c));
        status.push(if t <= c { 1.0 } else { 0.0 });
        x.extend(xi);
        z.extend(zi);
    }
    Raw { time, status, x, z, n, p, q }
}

fn dataset(r: &Raw) -> *mut MprDataset {
    let mut h = ptr::null_mut();
    let s = unsafe {
        mpr_dataset_new(r.time.as_ptr(), r.status.as_ptr(), r.n, r.x.as_ptr(), r.p, r.z.as_ptr(), r.q, &mut h)
    };
    assert_eq!(s, MPR_OK, "{}", last_error());
    h
}

fn last_error() -> String {
    let p = mpr_last_error_message();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

fn native(r: &Raw) -> SurvivalDataset {
    let x = DMatrix::from_row_slice(r.n, r.p, &r.x);
    let z = DMatrix::from_row_slice(r.n, r.q, &r.z);
    SurvivalDataset::from_covariates(r.time.clone(), r.status.clone(), &x, &z).unwrap()
}

#[test]
fn unpenalized_fit_matches_the_library() {
    let r = raw(300, 1);
    let ds = dataset(&r);
    assert_eq!(unsafe { mpr_dataset_n(ds) }, 300);
    assert_eq!(unsafe { mpr_dataset_n_events(ds) }, r.status.iter().filter(|&&d| d == 1.0).count());

    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { mpr_fit_unpenalized(ds, &mut fit) }, MPR_OK, "{}", last_error());
    let k = unsafe { mpr_fit_n_coefficients(fit) };
    assert_eq!(k, r.p + r.q + 2);
    assert_eq!(unsafe { mpr_fit_n_scale(fit) }, r.p + 1);

    let mut coef = vec![0.0; k];
    let mut se = vec![0.0; k];
    assert_eq!(unsafe { mpr_fit_coefficients(fit, coef.as_mut_ptr(), k) }, MPR_OK);
    assert_eq!(unsafe { mpr_fit_std_errors(fit, se.as_mut_ptr(), k) }, MPR_OK);

    let expected =
        select_and_fit(&native(&r), &PenaltySpec::none(), &SolverConfig::default(), &DEConfig::default()).unwrap();
    assert_eq!(coef, expected.theta_original.to_flat().as_slice());
    assert_eq!(se, expected.standard_errors_original().unwrap());
    assert_eq!(unsafe { mpr_fit_loglik(fit) }, expected.fit.loglik);
    assert_eq!(unsafe { mpr_fit_converged(fit) }, 1);
    // With no penalty the effective degrees of freedom equal the parameter count.
    assert!((unsafe { mpr_fit_effective_df(fit) } - k as f64).abs() < 1e-9);

    unsafe {
        mpr_fit_free(fit);
        mpr_dataset_free(ds);
    }
}

#[test]
fn select_reports_lambda_and_mask() {
    let r = raw(250, 2);
    let ds = dataset(&r);
    let mut opts = mpr_select_options_default();
    opts.de_generations = 8;
    opts.seed = 9;
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { mpr_select(ds, &opts, &mut fit) }, MPR_OK, "{}", last_error());

    let mut lambda = [f64::NAN; 2];
    let mut written = 0usize;
    assert_eq!(unsafe { mpr_fit_lambda(fit, lambda.as_mut_ptr(), 2, &mut written) }, MPR_OK);
    assert_eq!(written, 1);
    assert!((0.0..=1.0).contains(&lambda[0]));

    let k = unsafe { mpr_fit_n_coefficients(fit) };
    let mut mask = vec![9u8; k];
    assert_eq!(unsafe { mpr_fit_selected(fit, mask.as_mut_ptr(), k) }, MPR_OK);
    assert!(mask.iter().all(|&m| m <= 1));
    assert_eq!(mask[0], 1);
    assert_eq!(mask[r.p + 1], 1);
    assert!(unsafe { mpr_fit_bic(fit) }.is_finite());

    // Same seed, same answer.
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { mpr_select(ds, &opts, &mut again) }, MPR_OK);
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    unsafe {
        mpr_fit_coefficients(fit, a.as_mut_ptr(), k);
        mpr_fit_coefficients(again, b.as_mut_ptr(), k);
    }
    assert_eq!(a, b);

    unsafe {
        mpr_fit_free(fit);
        mpr_fit_free(again);
        mpr_dataset_free(ds);
    }
}

#[test]
fn separate_tuning_returns_two_scalars() {
    let r = raw(200, 3);
    let ds = dataset(&r);
    let mut opts = mpr_select_options_default();
    opts.tuning = MPR_TUNING_SEPARATE_ADAPTIVE;
    opts.de_generations = 4;
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { mpr_select(ds, &opts, &mut fit) }, MPR_OK, "{}", last_error());
    let mut lambda = [0.0; 2];
    let mut written = 0;
    assert_eq!(unsafe { mpr_fit_lambda(fit, lambda.as_mut_ptr(), 1, &mut written) }, MPR_ERR_BUFFER_TOO_SMALL);
    assert_eq!(unsafe { mpr_fit_lambda(fit, lambda.as_mut_ptr(), 2, &mut written) }, MPR_OK);
    assert_eq!(written, 2);
    unsafe {
        mpr_fit_free(fit);
        mpr_dataset_free(ds);
    }
}

#[test]
fn invalid_input_sets_status_and_message() {
    let mut r = raw(20, 4);
    r.status[3] = 0.5;
    let mut h = ptr::null_mut();
    let s = unsafe {
        mpr_dataset_new(r.time.as_ptr(), r.status.as_ptr(), r.n, r.x.as_ptr(), r.p, r.z.as_ptr(), r.q, &mut h)
    };
    assert_eq!(s, MPR_ERR_DATA);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    // A later success clears the message.
    let good = raw(20, 4);
    let ds = dataset(&good);
    assert!(mpr_last_error_message().is_null());
    unsafe { mpr_dataset_free(ds) };
}

#[test]
fn null_pointers_and_bad_codes_are_rejected() {
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { mpr_fit_unpenalized(ptr::null(), &mut fit) }, MPR_ERR_NULL_POINTER);
    assert!(fit.is_null());
    assert_eq!(unsafe { mpr_fit_coefficients(ptr::null(), ptr::null_mut(), 0) }, MPR_ERR_NULL_POINTER);
    assert!(unsafe { mpr_fit_bic(ptr::null()) }.is_nan());
    assert_eq!(unsafe { mpr_fit_n_coefficients(ptr::null()) }, 0);
    unsafe {
        mpr_fit_free(ptr::null_mut());
        mpr_dataset_free(ptr::null_mut());
    }

    let r = raw(50, 5);
    let ds = dataset(&r);
    let mut opts = mpr_select_options_default();
    opts.penalty = 42;
    assert_eq!(unsafe { mpr_select(ds, &opts, &mut fit) }, MPR_ERR_CONFIG);
    assert!(last_error().contains("42"));
    opts.penalty = MPR_PENALTY_LASSO;
    opts.tuning = MPR_TUNING_SINGLE_ADAPTIVE;
    assert_eq!(unsafe { mpr_select(ds, &opts, &mut fit) }, MPR_ERR_CONFIG);
    unsafe { mpr_dataset_free(ds) };
}

#[test]
fn errors_are_thread_local() {
    let mut h = ptr::null_mut();
    let t = [1.0];
    let d = [2.0];
    assert_ne!(unsafe { mpr_dataset_new(t.as_ptr(), d.as_ptr(), 1, ptr::null(), 0, ptr::null(), 0, &mut h) }, MPR_OK);
    let other = std::thread::spawn(|| mpr_last_error_message().is_null()).join().unwrap();
    assert!(other);
    assert!(!last_error().is_empty());
}

#[test]
fn weibull_check_recovers_the_shape() {
    // Uncensored Weibull(shape 2, rate 0.5): log H = log 0.5 + 2 log t.
    let mut rng = StdRng::seed_from_u64(6);
    let n = 4000;
    let time: Vec<f64> = (0..n).map(|_| (-rng.random_range(f64::EPSILON..1.0f64).ln() / 0.5).sqrt()).collect();
    let status = vec![1.0; n];
    let (mut slope, mut intercept, mut r2) = (0.0, 0.0, 0.0);
    let s = unsafe { mpr_weibull_check(time.as_ptr(), status.as_ptr(), n, &mut slope, &mut intercept, &mut r2) };
    assert_eq!(s, MPR_OK, "{}", last_error());
    assert!((slope - 2.0).abs() < 0.15, "slope {slope}");
    assert!((intercept - 0.5f64.ln()).abs() < 0.15, "intercept {intercept}");
    assert!(r2 > 0.98);

    let censored = vec![0.0; n];
    let s = unsafe { mpr_weibull_check(time.as_ptr(), censored.as_ptr(), n, &mut slope, &mut intercept, &mut r2) };
    assert_ne!(s, MPR_OK);
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(mpr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mprsel.h")).unwrap();
    for name in [
        "typedef struct MprDataset MprDataset",
        "typedef struct MprFit MprFit",
        "MprSelectOptions",
        "mpr_dataset_new",
        "mpr_select",
        "mpr_fit_free",
        "mpr_last_error_message",
        "mpr_weibull_check",
        "MPR_ERR_NUMERICAL",
        "MPR_PENALTY_ALASSO",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
