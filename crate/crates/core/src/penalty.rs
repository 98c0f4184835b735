//! Penalty families, the smoothed absolute value, and per-coefficient tuning
//! expansion.
//!
//! Every penalty is evaluated on `a(theta) = sqrt(theta^2 + eps^2) - eps` in
//! place of `|theta|`, which makes the penalized log-likelihood twice
//! continuously differentiable so Newton-Raphson applies directly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::ThetaVector;
use crate::error::{Error, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_WEIGHT_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    None,
    Lasso,
    Scad,
    Alasso,
}

/// How the tuning scalar(s) expand into per-coefficient tuning values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuningMode {
    /// One `lambda` for every coefficient.
    Single,
    /// One `lambda`, multiplied by adaptive weights.
    SingleAdaptive,
    /// `lambda_beta` for scale and `lambda_alpha` for shape.
    SeparateNonAdaptive,
    /// Separate scalars, each multiplied by adaptive weights.
    SeparateAdaptive,
}

impl TuningMode {
    pub fn n_scalars(self) -> usize {
        match self {
            TuningMode::Single | TuningMode::SingleAdaptive => 1,
            TuningMode::SeparateNonAdaptive | TuningMode::SeparateAdaptive => 2,
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, TuningMode::SingleAdaptive | TuningMode::SeparateAdaptive)
    }

    /// The mode matching `family` with one or two tuning scalars.
    pub fn for_family(family: PenaltyFamily, separate: bool) -> Self {
        match (family == PenaltyFamily::Alasso, separate) {
            (false, false) => TuningMode::Single,
            (true, false) => TuningMode::SingleAdaptive,
            (false, true) => TuningMode::SeparateNonAdaptive,
            (true, true) => TuningMode::SeparateAdaptive,
        }
    }
}

/// Adaptive weights; entry 0 of each vector belongs to the intercept and is
/// ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeights {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    pub scad_a: f64,
    pub epsilon: f64,
    pub adaptive_weights: Option<AdaptiveWeights>,
    pub tuning_mode: TuningMode,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, tuning_mode: TuningMode) -> Self {
        PenaltySpec { family, scad_a: DEFAULT_SCAD_A, epsilon: DEFAULT_EPSILON, adaptive_weights: None, tuning_mode }
    }

    pub fn none() -> Self {
        PenaltySpec::new(PenaltyFamily::None, TuningMode::Single)
    }

    pub fn with_weights(mut self, weights: AdaptiveWeights) -> Self {
        self.adaptive_weights = Some(weights);
        self
    }

    /// Checks the parameter ranges and that adaptive tuning modes go with the
    /// adaptive family. Weights are checked later, when tuning values are
    /// expanded, since they are usually computed from an unpenalized fit.
    pub fn validate(&self) -> Result<()> {
        if self.scad_a.is_nan() || self.scad_a <= 2.0 {
            return Err(Error::InvalidConfig(format!("scad_a must exceed 2, got {}", self.scad_a)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        let adaptive_family = self.family == PenaltyFamily::Alasso;
        if self.family != PenaltyFamily::None && self.tuning_mode.is_adaptive() != adaptive_family {
            return Err(Error::InvalidConfig(format!(
                "tuning mode {:?} does not match penalty family {:?}",
                self.tuning_mode, self.family
            )));
        }
        Ok(())
    }
}

/// Per-coefficient tuning values. Intercept entries are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl LambdaVector {
    pub fn zeros(p: usize, q: usize) -> Self {
        LambdaVector { beta: vec![0.0; p + 1], alpha: vec![0.0; q + 1] }
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().chain(self.alpha.iter()).all(|&l| l == 0.0)
    }
}

pub fn smooth_abs(x: f64, epsilon: f64) -> f64 {
    (x * x + epsilon * epsilon).sqrt() - epsilon
}

pub fn smooth_abs_d1(x: f64, epsilon: f64) -> f64 {
    x / (epsilon * epsilon + x * x).sqrt()
}

pub fn smooth_abs_d2(x: f64, epsilon: f64) -> f64 {
    let s = epsilon * epsilon + x * x;
    epsilon * epsilon / (s * s.sqrt())
}

/// Value and first two derivatives of `J` with respect to its argument `u`
/// (the smoothed magnitude), before composition with `a(theta)`.
fn outer(family: PenaltyFamily, lambda: f64, u: f64, scad_a: f64) -> (f64, f64, f64) {
    match family {
        PenaltyFamily::None => (0.0, 0.0, 0.0),
        PenaltyFamily::Lasso | PenaltyFamily::Alasso => (lambda * u, lambda, 0.0),
        PenaltyFamily::Scad => {
            if u <= lambda {
                (lambda * u, lambda, 0.0)
            } else if u < scad_a * lambda {
                let denom = 2.0 * (scad_a - 1.0);
                (
                    (2.0 * scad_a * lambda * u - u * u - lambda * lambda) / denom,
                    (scad_a * lambda - u) / (scad_a - 1.0),
                    -1.0 / (scad_a - 1.0),
                )
            } else {
                (lambda * lambda * (scad_a + 1.0) / 2.0, 0.0, 0.0)
            }
        }
    }
}

/// `J_lambda(a(theta))`. For the adaptive family `lambda` is expected to
/// already carry the coefficient's weight (see [`expand_lambda`]).
pub fn penalty_value(family: PenaltyFamily, lambda: f64, theta: f64, spec: &PenaltySpec) -> f64 {
    outer(family, lambda, smooth_abs(theta, spec.epsilon), spec.scad_a).0
}

/// `dJ/dtheta = J'(a) a'(theta)`.
pub fn penalty_d1(family: PenaltyFamily, lambda: f64, theta: f64, spec: &PenaltySpec) -> f64 {
    let (_, j1, _) = outer(family, lambda, smooth_abs(theta, spec.epsilon), spec.scad_a);
    j1 * smooth_abs_d1(theta, spec.epsilon)
}

/// `d2J/dtheta2 = J''(a) a'^2 + J'(a) a''`.
pub fn penalty_d2(family: PenaltyFamily, lambda: f64, theta: f64, spec: &PenaltySpec) -> f64 {
    let (_, j1, j2) = outer(family, lambda, smooth_abs(theta, spec.epsilon), spec.scad_a);
    let d1 = smooth_abs_d1(theta, spec.epsilon);
    j2 * d1 * d1 + j1 * smooth_abs_d2(theta, spec.epsilon)
}

/// Expands one or two tuning scalars into per-coefficient tuning values for a
/// model with `p` scale and `q` shape covariates.
pub fn expand_lambda(scalars: &[f64], spec: &PenaltySpec, p: usize, q: usize) -> Result<LambdaVector> {
    let expected = spec.tuning_mode.n_scalars();
    if scalars.len() != expected {
        return Err(Error::WrongScalarCount { expected, got: scalars.len() });
    }
    if let Some(bad) = scalars.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidConfig(format!("tuning scalars must be finite and >= 0, got {bad}")));
    }
    let (lb, la) = if expected == 1 { (scalars[0], scalars[0]) } else { (scalars[0], scalars[1]) };
    let mut out = LambdaVector { beta: vec![lb; p + 1], alpha: vec![la; q + 1] };
    if spec.tuning_mode.is_adaptive() {
        let w = spec.adaptive_weights.as_ref().ok_or(Error::MissingAdaptiveWeights)?;
        if w.beta.len() != p + 1 || w.alpha.len() != q + 1 {
            return Err(Error::DimensionMismatch(format!(
                "adaptive weights have lengths ({}, {}), model needs ({}, {})",
                w.beta.len(),
                w.alpha.len(),
                p + 1,
                q + 1
            )));
        }
        for (l, wj) in out.beta.iter_mut().zip(&w.beta) {
            *l *= wj;
        }
        for (l, wj) in out.alpha.iter_mut().zip(&w.alpha) {
            *l *= wj;
        }
    }
    out.beta[0] = 0.0;
    out.alpha[0] = 0.0;
    Ok(out)
}

/// Adaptive weights `1 / max(|theta_0j|, 1/cap)` from an unpenalized estimate.
pub fn alasso_weights(unpenalized: &ThetaVector, cap: f64) -> AdaptiveWeights {
    let floor = 1.0 / cap;
    let weights = |v: &DVector<f64>| {
        let mut w: Vec<f64> = v.iter().map(|c| 1.0 / c.abs().max(floor)).collect();
        w[0] = 0.0;
        w
    };
    AdaptiveWeights { beta: weights(&unpenalized.beta), alpha: weights(&unpenalized.alpha) }
}

/// Penalty gradient (`V`), diagonal curvature (`Sigma`) and total value for
/// each component. None of these include the sample-size factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerms {
    pub v_beta: DVector<f64>,
    pub v_alpha: DVector<f64>,
    pub sigma_beta: DVector<f64>,
    pub sigma_alpha: DVector<f64>,
    pub total: f64,
}

impl PenaltyTerms {
    pub fn v_flat(&self) -> DVector<f64> {
        concat(&self.v_beta, &self.v_alpha)
    }

    pub fn sigma_flat(&self) -> DVector<f64> {
        concat(&self.sigma_beta, &self.sigma_alpha)
    }
}

fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(a.len() + b.len());
    v.rows_mut(0, a.len()).copy_from(a);
    v.rows_mut(a.len(), b.len()).copy_from(b);
    v
}

pub fn assemble_penalty_terms(theta: &ThetaVector, lambda: &LambdaVector, spec: &PenaltySpec) -> Result<PenaltyTerms> {
    if theta.beta.len() != lambda.beta.len() || theta.alpha.len() != lambda.alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "theta has ({}, {}) entries, lambda has ({}, {})",
            theta.beta.len(),
            theta.alpha.len(),
            lambda.beta.len(),
            lambda.alpha.len()
        )));
    }
    let mut total = 0.0;
    let mut component = |coef: &DVector<f64>, lam: &[f64]| {
        let k = coef.len();
        let mut v = DVector::zeros(k);
        let mut s = DVector::zeros(k);
        for j in 1..k {
            v[j] = penalty_d1(spec.family, lam[j], coef[j], spec);
            s[j] = penalty_d2(spec.family, lam[j], coef[j], spec);
            total += penalty_value(spec.family, lam[j], coef[j], spec);
        }
        (v, s)
    };
    let (v_beta, sigma_beta) = component(&theta.beta, &lambda.beta);
    let (v_alpha, sigma_alpha) = component(&theta.alpha, &lambda.alpha);
    Ok(PenaltyTerms { v_beta, v_alpha, sigma_beta, sigma_alpha, total })
}

/// Total penalty only.
pub fn total_penalty(theta: &ThetaVector, lambda: &LambdaVector, spec: &PenaltySpec) -> f64 {
    let part = |coef: &DVector<f64>, lam: &[f64]| -> f64 {
        (1..coef.len()).map(|j| penalty_value(spec.family, lam[j], coef[j], spec)).sum()
    };
    part(&theta.beta, &lambda.beta) + part(&theta.alpha, &lambda.alpha)
}
