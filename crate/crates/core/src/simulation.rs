//! Simulation study engine: AR(1) covariates, Weibull MPR event times,
//! calibrated exponential censoring, and selection/estimation metrics
//! aggregated over replicates.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SurvivalDataset, ThetaVector};
use crate::error::{Error, Result};
use crate::penalty::{PenaltyFamily, PenaltySpec, TuningMode};
use crate::selection::{select_and_fit, DEConfig};
use crate::solver::SolverConfig;

/// Scale coefficients of the reference design (intercept first).
pub const REFERENCE_BETA: [f64; 11] = [-1.5, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.8, 0.5, 0.0, 0.0];
/// Shape coefficients of the reference design (intercept first).
pub const REFERENCE_ALPHA: [f64; 11] = [0.5, 0.4, 0.0, 0.0, 0.0, 0.4, -0.2, 0.0, 0.0, 0.0, 0.0];

/// Monte Carlo sample size used for censoring calibration.
const CALIBRATION_DRAWS: usize = 50_000;
const CALIBRATION_TOL: f64 = 0.005;
const CALIBRATION_STEPS: usize = 60;
pub const DEFAULT_RATE_BRACKET: (f64, f64) = (1e-6, 1e6);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimScenario {
    pub n: usize,
    pub rho: f64,
    /// Shared covariates enter both components, so both vectors have the same
    /// length (intercept plus one entry per covariate).
    pub true_beta: Vec<f64>,
    pub true_alpha: Vec<f64>,
    pub target_censoring: f64,
    pub family: PenaltyFamily,
    pub tuning_mode: TuningMode,
    pub n_replicates: usize,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            n: 500,
            rho: 0.5,
            true_beta: REFERENCE_BETA.to_vec(),
            true_alpha: REFERENCE_ALPHA.to_vec(),
            target_censoring: 0.25,
            family: PenaltyFamily::Alasso,
            tuning_mode: TuningMode::SingleAdaptive,
            n_replicates: 200,
            seed: 1,
        }
    }
}

impl SimScenario {
    /// Reference design with the given size, censoring level and penalty.
    pub fn reference(n: usize, target_censoring: f64, family: PenaltyFamily, separate: bool) -> Self {
        SimScenario {
            n,
            target_censoring,
            family,
            tuning_mode: TuningMode::for_family(family, separate),
            ..SimScenario::default()
        }
    }

    pub fn n_covariates(&self) -> usize {
        self.true_beta.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !(self.target_censoring > 0.0 && self.target_censoring < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target censoring must lie in (0, 1), got {}",
                self.target_censoring
            )));
        }
        if self.true_beta.len() < 2 || self.true_beta.len() != self.true_alpha.len() {
            return Err(Error::InvalidConfig(
                "true_beta and true_alpha must have equal length and at least one covariate".into(),
            ));
        }
        if self.n < 2 || self.n_replicates == 0 {
            return Err(Error::InvalidConfig("need n >= 2 and at least one replicate".into()));
        }
        PenaltySpec::new(self.family, self.tuning_mode).validate()
    }
}

/// Rows of `dim` standard normal variables with lag-`k` correlation `rho^k`.
pub fn gen_ar1_covariates<R: Rng + ?Sized>(n: usize, dim: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let innovation_sd = (1.0 - rho * rho).sqrt();
    let mut m = DMatrix::zeros(n, dim);
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        if dim > 0 {
            m[(i, 0)] = prev;
        }
        for j in 1..dim {
            let z: f64 = rng.sample(StandardNormal);
            prev = rho * prev + innovation_sd * z;
            m[(i, j)] = prev;
        }
    }
    m
}

/// Weibull quantile for cumulative hazard `tau t^gamma` at survival
/// probability `u`: `(-log u / tau)^(1/gamma)`.
pub fn weibull_quantile(u: f64, tau: f64, gamma: f64) -> f64 {
    (-u.ln() / tau).powf(1.0 / gamma)
}

/// Draws one event time by inversion. Rows include the leading 1.
pub fn sample_weibull_mpr<R: Rng + ?Sized>(
    x_row: &[f64],
    z_row: &[f64],
    beta: &[f64],
    alpha: &[f64],
    rng: &mut R,
) -> f64 {
    let tau = dot(x_row, beta).exp();
    let gamma = dot(z_row, alpha).exp();
    // (0, 1]: exclude 0 so the quantile stays finite
    let u: f64 = 1.0 - rng.random::<f64>();
    weibull_quantile(u, tau, gamma)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Covariates and event times for `n` subjects of a scenario.
fn draw_covariates_and_events<R: Rng + ?Sized>(
    scenario: &SimScenario,
    n: usize,
    rng: &mut R,
) -> (DMatrix<f64>, Vec<f64>) {
    let k = scenario.n_covariates();
    let cov = gen_ar1_covariates(n, k, scenario.rho, rng);
    let mut row = vec![1.0; k + 1];
    let events = (0..n)
        .map(|i| {
            for j in 0..k {
                row[j + 1] = cov[(i, j)];
            }
            sample_weibull_mpr(&row, &row, &scenario.true_beta, &scenario.true_alpha, rng)
        })
        .collect();
    (cov, events)
}

/// splitmix64-style mixing of a base seed with a stream index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const CALIBRATION_STREAM: u64 = u64::MAX;
const DE_STREAM_OFFSET: u64 = 1 << 32;

/// Finds the exponential censoring rate giving censoring proportion `target`
/// under the scenario, by bisection (on the log scale) within `bracket`.
pub fn calibrate_censoring(scenario: &SimScenario, target: f64, bracket: (f64, f64)) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidConfig(format!("target censoring must lie in (0, 1), got {target}")));
    }
    let (lo0, hi0) = bracket;
    if !(lo0 > 0.0 && lo0 < hi0 && hi0.is_finite()) {
        return Err(Error::InvalidConfig(format!("invalid rate bracket [{lo0}, {hi0}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, CALIBRATION_STREAM));
    let (_, events) = draw_covariates_and_events(scenario, CALIBRATION_DRAWS, &mut rng);
    let unit: Vec<f64> = (0..CALIBRATION_DRAWS).map(|_| rng.sample(Exp1)).collect();
    // C = E / rate is censoring before T when E < rate * T.
    let censored_fraction = |rate: f64| -> f64 {
        let hits = unit.iter().zip(&events).filter(|(e, t)| **e < rate * **t).count();
        hits as f64 / CALIBRATION_DRAWS as f64
    };
    let (mut lo, mut hi) = (lo0.ln(), hi0.ln());
    for _ in 0..CALIBRATION_STEPS {
        let mid = 0.5 * (lo + hi);
        let p = censored_fraction(mid.exp());
        if (p - target).abs() < CALIBRATION_TOL {
            return Ok(mid.exp());
        }
        if p < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::CalibrationFailed { target, lo: lo0, hi: hi0 })
}

/// One simulated dataset along with its raw covariate matrix.
pub fn generate_replicate<R: Rng + ?Sized>(
    scenario: &SimScenario,
    censoring_rate: f64,
    rng: &mut R,
) -> Result<(SurvivalDataset, DMatrix<f64>)> {
    let (cov, events) = draw_covariates_and_events(scenario, scenario.n, rng);
    let mut time = Vec::with_capacity(scenario.n);
    let mut status = Vec::with_capacity(scenario.n);
    for ev in events {
        let c: f64 = rng.sample::<f64, _>(Exp1) / censoring_rate;
        if ev <= c {
            time.push(ev);
            status.push(1.0);
        } else {
            time.push(c);
            status.push(0.0);
        }
    }
    let data = SurvivalDataset::from_covariates(time, status, &cov, &cov)?;
    Ok((data, cov))
}

/// What a fitter hands back for one replicate; estimates and standard errors
/// on the original covariate scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub theta: ThetaVector,
    /// Flattened `(beta, alpha)` standard errors.
    pub std_errors: Vec<f64>,
    /// Flattened `(beta, alpha)` selection mask.
    pub selected: Vec<bool>,
}

/// Fits one simulated dataset. `seed` is a per-replicate seed for any
/// randomness the fitter needs.
pub trait ReplicateFitter: Sync {
    fn fit(&self, data: &SurvivalDataset, seed: u64) -> Result<ReplicateFit>;
}

/// The full tuning-selection procedure.
pub struct SelectionFitter {
    pub penalty: PenaltySpec,
    pub solver: SolverConfig,
    pub de: DEConfig,
}

impl ReplicateFitter for SelectionFitter {
    fn fit(&self, data: &SurvivalDataset, seed: u64) -> Result<ReplicateFit> {
        let de = DEConfig { seed, ..self.de.clone() };
        let res = select_and_fit(data, &self.penalty, &self.solver, &de)?;
        if !res.fit.converged {
            return Err(Error::DidNotConverge(self.solver.max_iter));
        }
        let std_errors = res.standard_errors_original().ok_or(Error::SingularSystem)?;
        Ok(ReplicateFit { theta: res.theta_original, std_errors, selected: res.fit.selected_mask })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    /// Mean number of true zeros estimated as zero.
    pub c: f64,
    /// Mean number of true non-zeros estimated as zero.
    pub ic: f64,
    /// Fraction of replicates selecting exactly the true support.
    pub pt: f64,
    pub mse: f64,
    pub n_true_zero: usize,
    pub n_true_nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    /// `beta<j>` or `alpha<j>`.
    pub name: String,
    pub truth: f64,
    pub mean_estimate: f64,
    /// Standard deviation of the estimates across replicates.
    pub se: f64,
    /// Mean estimated standard error.
    pub see: f64,
    /// Coverage of the nominal 95% Wald interval.
    pub cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: SimScenario,
    pub censoring_rate: f64,
    /// Mean censored fraction over successful replicates.
    pub realized_censoring: f64,
    pub n_succeeded: usize,
    pub n_failed: usize,
    pub scale: ComponentMetrics,
    pub shape: ComponentMetrics,
    pub coefficients: Vec<CoefficientSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_wall_time_secs: Option<f64>,
}

impl SimReport {
    /// The report with wall-clock timing removed, leaving only quantities
    /// that are a pure function of the scenario and seed.
    pub fn without_timing(mut self) -> Self {
        self.mean_wall_time_secs = None;
        self
    }

    pub fn coefficient(&self, name: &str) -> Option<&CoefficientSummary> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

struct ReplicateOutcome {
    fit: ReplicateFit,
    covariance: DMatrix<f64>,
    censored: f64,
    seconds: f64,
}

/// Sample covariance (denominator `n - 1`) of the columns of `m`.
fn sample_covariance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let means = m.row_mean();
    let mut centered = m.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    centered.tr_mul(&centered) / (n - 1.0)
}

/// Runs the scenario with the penalized selection procedure.
pub fn run_scenario(scenario: &SimScenario, solver: &SolverConfig, de: &DEConfig) -> Result<SimReport> {
    let fitter = SelectionFitter {
        penalty: PenaltySpec::new(scenario.family, scenario.tuning_mode),
        solver: *solver,
        de: de.clone(),
    };
    run_scenario_with(scenario, &fitter)
}

/// Runs the scenario with an arbitrary fitter. Replicates run in parallel,
/// each with a seed derived from `(scenario.seed, index)`, and are aggregated
/// in index order.
pub fn run_scenario_with<F: ReplicateFitter>(scenario: &SimScenario, fitter: &F) -> Result<SimReport> {
    scenario.validate()?;
    let rate = calibrate_censoring(scenario, scenario.target_censoring, DEFAULT_RATE_BRACKET)?;
    let outcomes: Vec<Option<ReplicateOutcome>> = (0..scenario.n_replicates)
        .into_par_iter()
        .map(|r| {
            let started = Instant::now();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, r as u64));
            let (data, cov) = generate_replicate(scenario, rate, &mut rng).ok()?;
            let fit = fitter.fit(&data, derive_seed(scenario.seed, DE_STREAM_OFFSET + r as u64)).ok()?;
            let k = scenario.true_beta.len();
            if fit.theta.beta.len() != k || fit.theta.alpha.len() != k || fit.std_errors.len() != 2 * k {
                return None;
            }
            let censored = 1.0 - data.n_events() as f64 / data.n() as f64;
            Some(ReplicateOutcome {
                fit,
                covariance: sample_covariance(&cov),
                censored,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect();
    let ok: Vec<&ReplicateOutcome> = outcomes.iter().flatten().collect();
    let n_failed = scenario.n_replicates - ok.len();
    if ok.is_empty() {
        return Err(Error::InvalidConfig("every replicate failed".into()));
    }

    let k = scenario.true_beta.len();
    let component = |truth: &[f64], offset: usize| -> ComponentMetrics {
        let mut c = 0.0;
        let mut ic = 0.0;
        let mut pt = 0.0;
        let mut mse = 0.0;
        for o in &ok {
            let est = if offset == 0 { &o.fit.theta.beta } else { &o.fit.theta.alpha };
            let mut exact = true;
            for (j, &t) in truth.iter().enumerate().skip(1) {
                let selected = o.fit.selected[offset + j];
                let nonzero = t != 0.0;
                if !nonzero && !selected {
                    c += 1.0;
                }
                if nonzero && !selected {
                    ic += 1.0;
                }
                exact &= selected == nonzero;
            }
            if exact {
                pt += 1.0;
            }
            let diff = DVector::from_fn(k - 1, |j, _| est[j + 1] - truth[j + 1]);
            mse += (diff.transpose() * &o.covariance * &diff)[(0, 0)];
        }
        let m = ok.len() as f64;
        let n_true_nonzero = truth[1..].iter().filter(|v| **v != 0.0).count();
        ComponentMetrics {
            c: c / m,
            ic: ic / m,
            pt: pt / m,
            mse: mse / m,
            n_true_zero: k - 1 - n_true_nonzero,
            n_true_nonzero,
        }
    };
    let scale = component(&scenario.true_beta, 0);
    let shape = component(&scenario.true_alpha, k);

    let mut coefficients = Vec::new();
    for (label, truth, offset) in [("beta", &scenario.true_beta, 0), ("alpha", &scenario.true_alpha, k)] {
        for (j, &t) in truth.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let est: Vec<f64> =
                ok.iter().map(|o| if offset == 0 { o.fit.theta.beta[j] } else { o.fit.theta.alpha[j] }).collect();
            let ses: Vec<f64> = ok.iter().map(|o| o.fit.std_errors[offset + j]).collect();
            let m = est.len() as f64;
            let mean = est.iter().sum::<f64>() / m;
            let sd = if est.len() > 1 {
                (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
            } else {
                0.0
            };
            let covered = est.iter().zip(&ses).filter(|(e, s)| (*e - t).abs() <= 1.96 * **s).count();
            coefficients.push(CoefficientSummary {
                name: format!("{label}{j}"),
                truth: t,
                mean_estimate: mean,
                se: sd,
                see: ses.iter().sum::<f64>() / m,
                cp: covered as f64 / m,
            });
        }
    }

    let m = ok.len() as f64;
    Ok(SimReport {
        scenario: scenario.clone(),
        censoring_rate: rate,
        realized_censoring: ok.iter().map(|o| o.censored).sum::<f64>() / m,
        n_succeeded: ok.len(),
        n_failed,
        scale,
        shape,
        coefficients,
        mean_wall_time_secs: Some(ok.iter().map(|o| o.seconds).sum::<f64>() / m),
    })
}
