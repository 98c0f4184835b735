//! Penalized Newton-Raphson, unpenalized fitting, sandwich covariance and
//! effective degrees of freedom.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::data::{SurvivalDataset, ThetaVector};
use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood, LikelihoodWorkspace};
use crate::penalty::{assemble_penalty_terms, total_penalty, LambdaVector, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Sup-norm threshold on the parameter change between iterates.
    pub conv_tol: f64,
    pub max_step_halvings: usize,
    /// Initial ridge, relative to the largest diagonal entry, added only when
    /// the Newton matrix cannot be factorized.
    pub ridge_boost: f64,
    /// Coefficients with magnitude below this are reported as zero.
    pub zero_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iter: 100, conv_tol: 1e-6, max_step_halvings: 20, ridge_boost: 1e-8, zero_tol: 1e-3 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.conv_tol > 0.0
            && self.max_step_halvings > 0
            && self.ridge_boost > 0.0
            && self.zero_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("solver settings must all be positive".into()))
        }
    }
}

/// Ridge escalation stops once the ridge reaches this fraction of the
/// largest diagonal entry.
const MAX_RIDGE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: ThetaVector,
    pub converged: bool,
    pub n_iter: usize,
    /// Unpenalized log-likelihood at the estimate.
    pub loglik: f64,
    pub penalized_loglik: f64,
    /// Sandwich covariance; absent when the penalized information is singular.
    pub covariance: Option<DMatrix<f64>>,
    pub effective_df: Option<f64>,
    /// Partial traces of `I_lambda^-1 I_0` over the scale and shape blocks.
    pub df_split: Option<(f64, f64)>,
    /// Flattened `(beta, alpha)` mask; intercepts are always selected.
    pub selected_mask: Vec<bool>,
    /// Penalized log-likelihood at every accepted iterate, starting at the
    /// initial value.
    pub trace: Vec<f64>,
    /// Sup-norm of the penalized score at the estimate.
    pub grad_norm: f64,
}

impl FitResult {
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.covariance.as_ref().map(|c| c.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect())
    }
}

enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factor {
    fn new(m: &DMatrix<f64>) -> Option<Factor> {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(Factor::Cholesky(c));
        }
        let lu = m.clone().lu();
        if lu.is_invertible() {
            Some(Factor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let out = match self {
            Factor::Cholesky(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn solve_vec(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let out = match self {
            Factor::Cholesky(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Solves `h d = g`, inflating the diagonal when `h` cannot be factorized.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>, config: &SolverConfig) -> Result<DVector<f64>> {
    if let Some(d) = Factor::new(h).and_then(|f| f.solve_vec(g)) {
        return Ok(d);
    }
    let scale = h.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut ridge = config.ridge_boost;
    while ridge <= MAX_RIDGE * (1.0 + 1e-12) {
        let mut boosted = h.clone();
        for i in 0..h.nrows() {
            boosted[(i, i)] += ridge * scale;
        }
        if let Some(d) = Factor::new(&boosted).and_then(|f| f.solve_vec(g)) {
            return Ok(d);
        }
        ridge *= 10.0;
    }
    Err(Error::SingularSystem)
}

fn penalized_objective(
    theta: &ThetaVector,
    data: &SurvivalDataset,
    lambda: &LambdaVector,
    spec: &PenaltySpec,
) -> Result<f64> {
    let ll = log_likelihood(theta, data)?;
    Ok(ll - data.n() as f64 * total_penalty(theta, lambda, spec))
}

/// Penalized information `I_0 + n diag(Sigma)` together with `I_0`.
fn information_pair(
    theta: &ThetaVector,
    data: &SurvivalDataset,
    lambda: &LambdaVector,
    spec: &PenaltySpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let ws = LikelihoodWorkspace::evaluate(theta, data)?;
    let info0 = ws.information(data)?;
    let terms = assemble_penalty_terms(theta, lambda, spec)?;
    let mut info_pen = info0.clone();
    let n = data.n() as f64;
    for (i, s) in terms.sigma_flat().iter().enumerate() {
        info_pen[(i, i)] += n * s;
    }
    Ok((info_pen, info0))
}

fn check_inputs(data: &SurvivalDataset, lambda: &LambdaVector, theta: &ThetaVector) -> Result<()> {
    theta.check_dims(data)?;
    if lambda.beta.len() != data.p() + 1 || lambda.alpha.len() != data.q() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "lambda has ({}, {}) entries, data expects ({}, {})",
            lambda.beta.len(),
            lambda.alpha.len(),
            data.p() + 1,
            data.q() + 1
        )));
    }
    if !theta.is_finite() {
        return Err(Error::NonFiniteInput { what: "initial theta", row: 0 });
    }
    Ok(())
}

/// Maximizes the penalized log-likelihood by Newton-Raphson from `init`.
///
/// Each iteration solves `I_lambda d = score - n V` and accepts the first of
/// `theta + d, theta + d/2, ...` that does not decrease the penalized
/// log-likelihood. Iteration stops when the accepted change has sup-norm
/// below `conv_tol`. Running out of iterations or step halvings returns a
/// result with `converged == false`.
pub fn fit_penalized(
    data: &SurvivalDataset,
    spec: &PenaltySpec,
    lambda: &LambdaVector,
    init: &ThetaVector,
    config: &SolverConfig,
) -> Result<FitResult> {
    spec.validate()?;
    config.validate()?;
    check_inputs(data, lambda, init)?;
    let n = data.n() as f64;
    let n_beta = data.p() + 1;

    let mut theta = init.clone();
    let mut current = penalized_objective(&theta, data, lambda, spec)?;
    let mut trace = vec![current];
    let mut converged = false;
    let mut n_iter = 0;

    while n_iter < config.max_iter {
        n_iter += 1;
        let ws = LikelihoodWorkspace::evaluate(&theta, data)?;
        let terms = assemble_penalty_terms(&theta, lambda, spec)?;
        let grad = ws.score(data)? - terms.v_flat() * n;
        let mut hess = ws.information(data)?;
        for (i, s) in terms.sigma_flat().iter().enumerate() {
            hess[(i, i)] += n * s;
        }
        let mut direction = newton_direction(&hess, &grad, config)?;
        if grad.dot(&direction) <= 0.0 && grad.amax() > 0.0 {
            // Indefinite system far from the optimum: fall back to scaled
            // steepest ascent.
            let scale = hess.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            direction = &grad / scale;
        }

        let flat = theta.to_flat();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_step_halvings {
            let candidate = ThetaVector::from_flat(&(&flat + &direction * step), n_beta);
            if let Ok(value) = penalized_objective(&candidate, data, lambda, spec) {
                if value >= current {
                    accepted = Some((candidate, value));
                    break;
                }
            }
            step *= 0.5;
        }

        match accepted {
            Some((candidate, value)) => {
                let change = (candidate.to_flat() - &flat).amax();
                theta = candidate;
                current = value;
                trace.push(current);
                if change < config.conv_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                // No ascent possible along the direction: at a stationary
                // point up to rounding if the full step was already tiny.
                converged = direction.amax() < config.conv_tol;
                break;
            }
        }
    }

    finish(data, spec, lambda, theta, converged, n_iter, trace, config)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    data: &SurvivalDataset,
    spec: &PenaltySpec,
    lambda: &LambdaVector,
    theta: ThetaVector,
    converged: bool,
    n_iter: usize,
    trace: Vec<f64>,
    config: &SolverConfig,
) -> Result<FitResult> {
    let n = data.n() as f64;
    let ws = LikelihoodWorkspace::evaluate(&theta, data)?;
    let terms = assemble_penalty_terms(&theta, lambda, spec)?;
    let grad = ws.score(data)? - terms.v_flat() * n;
    let loglik = ws.loglik;
    let penalized_loglik = loglik - n * terms.total;

    let (covariance, effective_df, df_split) = match information_pair(&theta, data, lambda, spec) {
        Ok((info_pen, info0)) => match (sandwich_from(&info_pen, &info0), df_from(&info_pen, &info0, data.p() + 1)) {
            (Ok(c), Ok((df, split))) => (Some(c), Some(df), Some(split)),
            _ => (None, None, None),
        },
        Err(_) => (None, None, None),
    };

    let selected_mask = selection_mask(&theta, config.zero_tol);
    Ok(FitResult {
        theta_hat: theta,
        converged,
        n_iter,
        loglik,
        penalized_loglik,
        covariance,
        effective_df,
        df_split,
        selected_mask,
        trace,
        grad_norm: grad.amax(),
    })
}

/// Flattened mask with intercepts always selected.
pub fn selection_mask(theta: &ThetaVector, zero_tol: f64) -> Vec<bool> {
    let part =
        |v: &DVector<f64>| -> Vec<bool> { v.iter().enumerate().map(|(j, c)| j == 0 || c.abs() >= zero_tol).collect() };
    let mut mask = part(&theta.beta);
    mask.extend(part(&theta.alpha));
    mask
}

/// Default starting point: the exponential-model intercept with every other
/// coefficient zero.
pub fn default_init(data: &SurvivalDataset) -> ThetaVector {
    let events: f64 = data.status().iter().sum();
    let exposure: f64 = data.time().iter().sum();
    let mut theta = ThetaVector::zeros(data.p(), data.q());
    theta.beta[0] = (events / exposure).ln();
    theta
}

/// Maximum likelihood fit without penalty.
pub fn fit_unpenalized(data: &SurvivalDataset, init: Option<&ThetaVector>, config: &SolverConfig) -> Result<FitResult> {
    let start = init.cloned().unwrap_or_else(|| default_init(data));
    fit_penalized(data, &PenaltySpec::none(), &LambdaVector::zeros(data.p(), data.q()), &start, config)
}

fn sandwich_from(info_pen: &DMatrix<f64>, info0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let factor = Factor::new(info_pen).ok_or(Error::SingularSystem)?;
    let k = info_pen.nrows();
    let inv = factor.solve(&DMatrix::identity(k, k)).ok_or(Error::SingularSystem)?;
    let m = &inv * info0 * &inv;
    Ok((&m + m.transpose()) * 0.5)
}

fn df_from(info_pen: &DMatrix<f64>, info0: &DMatrix<f64>, n_beta: usize) -> Result<(f64, (f64, f64))> {
    let factor = Factor::new(info_pen).ok_or(Error::SingularSystem)?;
    // One solve per column of I_0; the trace only needs the diagonal.
    let solved = factor.solve(info0).ok_or(Error::SingularSystem)?;
    let diag = solved.diagonal();
    let scale: f64 = diag.rows(0, n_beta).sum();
    let shape: f64 = diag.rows(n_beta, diag.len() - n_beta).sum();
    Ok((scale + shape, (scale, shape)))
}

/// `I_lambda^-1 I_0 I_lambda^-1` at `theta`, symmetrized.
pub fn sandwich_covariance(
    theta: &ThetaVector,
    data: &SurvivalDataset,
    spec: &PenaltySpec,
    lambda: &LambdaVector,
) -> Result<DMatrix<f64>> {
    check_inputs(data, lambda, theta)?;
    let (info_pen, info0) = information_pair(theta, data, lambda, spec)?;
    sandwich_from(&info_pen, &info0)
}

/// `tr(I_lambda^-1 I_0)` at `theta`.
pub fn effective_df(
    theta: &ThetaVector,
    data: &SurvivalDataset,
    spec: &PenaltySpec,
    lambda: &LambdaVector,
) -> Result<f64> {
    effective_df_split(theta, data, spec, lambda).map(|(df, _)| df)
}

/// Total effective degrees of freedom and its scale/shape split.
pub fn effective_df_split(
    theta: &ThetaVector,
    data: &SurvivalDataset,
    spec: &PenaltySpec,
    lambda: &LambdaVector,
) -> Result<(f64, (f64, f64))> {
    check_inputs(data, lambda, theta)?;
    let (info_pen, info0) = information_pair(theta, data, lambda, spec)?;
    df_from(&info_pen, &info0, data.p() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::{expand_lambda, PenaltyFamily, TuningMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ones(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    /// Weibull MPR data with independent normal covariates, inverse-CDF
    /// sampled, with exponential censoring.
    fn simulated(seed: u64, n: usize, beta: &[f64], alpha: &[f64]) -> SurvivalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = beta.len() - 1;
        let cov = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut t = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            let mut eb = beta[0];
            let mut ea = alpha[0];
            for j in 0..k {
                eb += beta[j + 1] * cov[(i, j)];
                ea += alpha[j + 1] * cov[(i, j)];
            }
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let ev = (-u.ln() / eb.exp()).powf(1.0 / ea.exp());
            let c = -rng.random_range(f64::EPSILON..1.0f64).ln() / 0.3;
            t.push(ev.min(c));
            d.push(if ev <= c { 1.0 } else { 0.0 });
        }
        SurvivalDataset::from_covariates(t, d, &cov, &cov).unwrap()
    }

    #[test]
    fn unpenalized_fit_is_stationary() {
        let data = simulated(1, 300, &[-1.0, 0.5, 0.0, -0.3], &[0.3, 0.2, 0.0, 0.0]);
        let fit = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        let g = crate::likelihood::score(&fit.theta_hat, &data).unwrap();
        assert!(g.amax() < 1e-6, "score {}", g.amax());
        assert_eq!(fit.effective_df.unwrap(), fit.effective_df.unwrap());
        assert!((fit.effective_df.unwrap() - 8.0).abs() < 1e-10);
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn intercept_only_unit_times() {
        let data = SurvivalDataset::new(vec![1.0; 4], vec![1.0; 4], ones(4), ones(4)).unwrap();
        // log t = 0 leaves the shape score at sum(delta) > 0 for every alpha,
        // so the shape MLE does not exist; the beta score must still vanish.
        let fit = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap();
        let g = crate::likelihood::score(&fit.theta_hat, &data).unwrap();
        assert!(g[0].abs() < 1e-8);
    }

    #[test]
    fn intercept_only_stationarity() {
        let t = vec![0.4, 1.3, 2.2, 0.9, 3.1, 0.2];
        let data = SurvivalDataset::new(t, vec![1.0; 6], ones(6), ones(6)).unwrap();
        let fit = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        let g = crate::likelihood::score(&fit.theta_hat, &data).unwrap();
        assert!(g.amax() < 1e-8);
    }

    #[test]
    fn huge_lambda_shrinks_everything() {
        let data = simulated(2, 200, &[-1.0, 0.8, 0.0], &[0.2, 0.3, 0.0]);
        let spec = PenaltySpec::new(PenaltyFamily::Lasso, TuningMode::Single);
        let lam = expand_lambda(&[1e3], &spec, 2, 2).unwrap();
        let init = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap().theta_hat;
        let fit = fit_penalized(&data, &spec, &lam, &init, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        for (j, &sel) in fit.selected_mask.iter().enumerate() {
            assert_eq!(sel, j == 0 || j == 3, "coefficient {j}");
        }
    }

    #[test]
    fn penalized_fit_is_a_local_max() {
        let data = simulated(3, 200, &[-1.0, 0.8, 0.0, 0.4], &[0.3, 0.3, 0.0, 0.0]);
        let spec = PenaltySpec::new(PenaltyFamily::Lasso, TuningMode::Single);
        let lam = expand_lambda(&[0.05], &spec, 3, 3).unwrap();
        let init = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap().theta_hat;
        let fit = fit_penalized(&data, &spec, &lam, &init, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        let best = fit.penalized_loglik;
        let flat = fit.theta_hat.to_flat();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let mut delta = DVector::from_fn(flat.len(), |_, _| rng.random_range(-1.0..1.0));
            let r = rng.random_range(0.0..0.05);
            delta *= r / delta.norm();
            let cand = ThetaVector::from_flat(&(&flat + delta), 4);
            let v = penalized_objective(&cand, &data, &lam, &spec).unwrap();
            assert!(v <= best + 1e-9, "{v} > {best}");
        }
    }

    #[test]
    fn lambda_zero_sandwich_is_inverse_information() {
        let data = simulated(5, 150, &[-0.5, 0.4], &[0.1, -0.2]);
        let fit = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap();
        let spec = PenaltySpec::new(PenaltyFamily::Scad, TuningMode::Single);
        let lam = LambdaVector::zeros(1, 1);
        let cov = sandwich_covariance(&fit.theta_hat, &data, &spec, &lam).unwrap();
        let info = crate::likelihood::observed_information(&fit.theta_hat, &data).unwrap();
        let inv = info.try_inverse().unwrap();
        let rel = (&cov - &inv).amax() / inv.amax();
        assert!(rel < 1e-8);
        assert_eq!(effective_df(&fit.theta_hat, &data, &spec, &lam).unwrap().round(), 4.0);
        assert!(cov.diagonal().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn determinism() {
        let data = simulated(6, 120, &[-0.5, 0.4, 0.2], &[0.1, -0.2, 0.0]);
        let spec = PenaltySpec::new(PenaltyFamily::Scad, TuningMode::SeparateNonAdaptive);
        let lam = expand_lambda(&[0.05, 0.1], &spec, 2, 2).unwrap();
        let init = default_init(&data);
        let a = fit_penalized(&data, &spec, &lam, &init, &SolverConfig::default()).unwrap();
        let b = fit_penalized(&data, &spec, &lam, &init, &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_inputs() {
        let data = simulated(7, 50, &[-0.5, 0.4], &[0.1, -0.2]);
        let spec = PenaltySpec::none();
        let lam = LambdaVector::zeros(1, 1);
        let bad = ThetaVector::new(vec![f64::NAN, 0.0], vec![0.0, 0.0]);
        assert!(fit_penalized(&data, &spec, &lam, &bad, &SolverConfig::default()).is_err());
        let short = ThetaVector::zeros(0, 1);
        assert_eq!(
            fit_penalized(&data, &spec, &lam, &short, &SolverConfig::default()).unwrap_err().code(),
            "DimensionMismatch"
        );
        let cfg = SolverConfig { conv_tol: 0.0, ..SolverConfig::default() };
        assert!(fit_unpenalized(&data, None, &cfg).is_err());
    }

    #[test]
    fn ridge_escalation_rescues_singular_matrix() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let g = DVector::from_vec(vec![1.0, 1.0]);
        let d = newton_direction(&h, &g, &SolverConfig::default()).unwrap();
        assert!(d.iter().all(|v| v.is_finite()));
        let zero = DMatrix::zeros(2, 2);
        let tiny = SolverConfig { ridge_boost: 1e-8, ..SolverConfig::default() };
        // all-zero matrix: ridge relative to max(1, |diag|) still factorizes
        assert!(newton_direction(&zero, &g, &tiny).is_ok());
        let nan = DMatrix::from_element(2, 2, f64::NAN);
        assert_eq!(newton_direction(&nan, &g, &tiny).unwrap_err(), Error::SingularSystem);
    }
}
