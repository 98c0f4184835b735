//! Tuning-parameter selection: the BIC objective, differential-evolution
//! search over the tuning scalar(s), and the complete select-then-refit
//! procedure.

mod de;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DMatrix;

pub use de::{de_minimize, DEConfig, DEOutcome};

use crate::data::{
    destandardize_covariance, destandardize_theta, standardize, StandardizationRecord, SurvivalDataset, ThetaVector,
};
use crate::error::{Error, Result};
use crate::penalty::{alasso_weights, expand_lambda, PenaltyFamily, PenaltySpec, DEFAULT_WEIGHT_CAP};
use crate::solver::{fit_penalized, fit_unpenalized, FitResult, SolverConfig};

/// `-2 l(theta_hat) + e log n` for a converged fit; `None` otherwise.
pub fn bic_of_fit(fit: &FitResult, n: usize) -> Option<f64> {
    if !fit.converged {
        return None;
    }
    let df = fit.effective_df?;
    let bic = -2.0 * fit.loglik + df * (n as f64).ln();
    bic.is_finite().then_some(bic)
}

/// Fits at the tuning scalars `scalars` starting from `init_theta` and
/// returns the BIC. Any failure of the inner fit (singular system, overflow,
/// non-convergence) scores `+inf`.
pub fn bic_objective(
    scalars: &[f64],
    data: &SurvivalDataset,
    penalty: &PenaltySpec,
    init_theta: &ThetaVector,
    config: &SolverConfig,
) -> f64 {
    bic_fit(scalars, data, penalty, init_theta, config).map(|(bic, _)| bic).unwrap_or(f64::INFINITY)
}

fn bic_fit(
    scalars: &[f64],
    data: &SurvivalDataset,
    penalty: &PenaltySpec,
    init_theta: &ThetaVector,
    config: &SolverConfig,
) -> Option<(f64, FitResult)> {
    let lambda = expand_lambda(scalars, penalty, data.p(), data.q()).ok()?;
    let fit = fit_penalized(data, penalty, &lambda, init_theta, config).ok()?;
    let bic = bic_of_fit(&fit, data.n())?;
    Some((bic, fit))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub lambda_star: Vec<f64>,
    pub bic_star: f64,
    /// Fit at `lambda_star` on the standardized covariates.
    pub fit: FitResult,
    /// Unpenalized estimate on the standardized covariates.
    pub unpenalized: ThetaVector,
    /// Penalty actually used, including any adaptive weights.
    pub penalty: PenaltySpec,
    pub standardization: StandardizationRecord,
    pub theta_original: ThetaVector,
    pub covariance_original: Option<DMatrix<f64>>,
    /// Best BIC after DE initialization and after each generation.
    pub bic_trace: Vec<f64>,
    pub n_inner_fits: usize,
}

impl SelectionResult {
    pub fn standard_errors_original(&self) -> Option<Vec<f64>> {
        self.covariance_original.as_ref().map(|c| c.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect())
    }
}

/// Runs the full procedure: standardize, fit unpenalized, derive adaptive
/// weights when needed, minimize BIC over the tuning scalar(s) by
/// differential evolution, and refit at the minimizer.
pub fn select_and_fit(
    data: &SurvivalDataset,
    penalty: &PenaltySpec,
    solver_config: &SolverConfig,
    de_config: &DEConfig,
) -> Result<SelectionResult> {
    penalty.validate()?;
    solver_config.validate()?;
    let (std_data, record) = standardize(data)?;
    let unpen = fit_unpenalized(&std_data, None, solver_config)?;
    if !unpen.converged {
        return Err(Error::DidNotConverge(solver_config.max_iter));
    }
    let theta0 = unpen.theta_hat.clone();

    let mut penalty = penalty.clone();
    if penalty.family == PenaltyFamily::Alasso {
        penalty.adaptive_weights = Some(alasso_weights(&theta0, DEFAULT_WEIGHT_CAP));
    }

    let n_scalars = penalty.tuning_mode.n_scalars();
    let n_inner = AtomicUsize::new(1);

    let (lambda_star, bic_trace, fit) = if penalty.family == PenaltyFamily::None {
        let bic = bic_of_fit(&unpen, std_data.n()).ok_or(Error::SingularSystem)?;
        (vec![0.0; n_scalars], vec![bic], unpen.clone())
    } else {
        de_config.validate(n_scalars)?;
        let history: FitHistory = Mutex::new(Vec::new());
        let objective = |scalars: &[f64], generation: usize| -> f64 {
            n_inner.fetch_add(1, Ordering::Relaxed);
            let init = if de_config.warm_start {
                warm_start_point(&history, generation).unwrap_or_else(|| theta0.clone())
            } else {
                theta0.clone()
            };
            match bic_fit(scalars, &std_data, &penalty, &init, solver_config) {
                Some((bic, fit)) => {
                    if de_config.warm_start {
                        history.lock().unwrap().push((generation, bic, scalars.to_vec(), fit.theta_hat));
                    }
                    bic
                }
                None => f64::INFINITY,
            }
        };
        let outcome = de_minimize(objective, n_scalars, de_config)?;
        if !outcome.best_value.is_finite() {
            return Err(Error::SingularSystem);
        }
        let lambda = expand_lambda(&outcome.best, &penalty, std_data.p(), std_data.q())?;
        let init = if de_config.warm_start {
            warm_start_point(&history, usize::MAX).unwrap_or_else(|| theta0.clone())
        } else {
            theta0.clone()
        };
        n_inner.fetch_add(1, Ordering::Relaxed);
        let fit = fit_penalized(&std_data, &penalty, &lambda, &init, solver_config)?;
        (outcome.best, outcome.trace, fit)
    };

    let bic_star = *bic_trace.last().expect("trace is never empty");
    let theta_original = destandardize_theta(&fit.theta_hat, &record)?;
    let covariance_original = match &fit.covariance {
        Some(c) => Some(destandardize_covariance(c, &record)?),
        None => None,
    };
    Ok(SelectionResult {
        lambda_star,
        bic_star,
        fit,
        unpenalized: theta0,
        penalty,
        standardization: record,
        theta_original,
        covariance_original,
        bic_trace,
        n_inner_fits: n_inner.load(Ordering::Relaxed),
    })
}

/// `(generation, bic, scalars, theta)` of every successful inner fit, for warm starts.
type FitHistory = Mutex<Vec<(usize, f64, Vec<f64>, ThetaVector)>>;

/// Best fit recorded in generations strictly before `generation`. Ties are
/// broken on the tuning scalars so the choice is independent of the order in
/// which parallel evaluations finished.
fn warm_start_point(history: &FitHistory, generation: usize) -> Option<ThetaVector> {
    let h = history.lock().unwrap();
    h.iter()
        .filter(|(g, ..)| *g < generation)
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| cmp_slices(&a.2, &b.2)))
        .map(|(.., theta)| theta.clone())
}

fn cmp_slices(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.total_cmp(y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}
