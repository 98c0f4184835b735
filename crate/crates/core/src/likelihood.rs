//! Weibull multi-parameter regression log-likelihood, score and observed
//! information.
//!
//! Each subject has scale `tau_i = exp(x_i' beta)` and shape
//! `gamma_i = exp(z_i' alpha)`, giving hazard `tau_i gamma_i t^(gamma_i - 1)`
//! and cumulative hazard `tau_i t^gamma_i`. Powers are always evaluated as
//! `exp(gamma_i * log t_i)` from the cached `log t_i`.

use nalgebra::{DMatrix, DVector};

use crate::data::{SurvivalDataset, ThetaVector};
use crate::error::{Error, Result};

/// Per-subject quantities at a fixed parameter vector.
#[derive(Debug, Clone)]
pub struct LikelihoodWorkspace {
    pub tau: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `tau_i * t_i^gamma_i`, the cumulative hazard at the observed time.
    pub cum_hazard: Vec<f64>,
    pub u_beta: DVector<f64>,
    pub u_alpha: DVector<f64>,
    pub w_beta: DVector<f64>,
    pub w_alpha: DVector<f64>,
    pub w_alpha_beta: DVector<f64>,
    pub loglik: f64,
}

impl LikelihoodWorkspace {
    pub fn evaluate(theta: &ThetaVector, data: &SurvivalDataset) -> Result<Self> {
        theta.check_dims(data)?;
        let n = data.n();
        let eta_x = data.x() * &theta.beta;
        let eta_z = data.z() * &theta.alpha;
        let mut ws = LikelihoodWorkspace {
            tau: Vec::with_capacity(n),
            gamma: Vec::with_capacity(n),
            cum_hazard: Vec::with_capacity(n),
            u_beta: DVector::zeros(n),
            u_alpha: DVector::zeros(n),
            w_beta: DVector::zeros(n),
            w_alpha: DVector::zeros(n),
            w_alpha_beta: DVector::zeros(n),
            loglik: 0.0,
        };
        let mut loglik = 0.0;
        for i in 0..n {
            let delta = data.status()[i];
            let log_t = data.log_time()[i];
            let tau = eta_x[i].exp();
            let gamma = eta_z[i].exp();
            let h = (eta_x[i] + gamma * log_t).exp();
            if !h.is_finite() || !gamma.is_finite() {
                return Err(Error::NonFiniteResult("cumulative hazard"));
            }
            let g_log_t = gamma * log_t;
            loglik += delta * (eta_x[i] + eta_z[i] + (gamma - 1.0) * log_t) - h;
            ws.u_beta[i] = delta - h;
            ws.u_alpha[i] = delta * (1.0 + g_log_t) - h * g_log_t;
            ws.w_beta[i] = h;
            ws.w_alpha[i] = (h * (g_log_t + 1.0) - delta) * g_log_t;
            ws.w_alpha_beta[i] = h * g_log_t;
            ws.tau.push(tau);
            ws.gamma.push(gamma);
            ws.cum_hazard.push(h);
        }
        if !loglik.is_finite() {
            return Err(Error::NonFiniteResult("log-likelihood"));
        }
        ws.loglik = loglik;
        Ok(ws)
    }

    /// Score vector `(X' U_beta, Z' U_alpha)`.
    pub fn score(&self, data: &SurvivalDataset) -> Result<DVector<f64>> {
        let gb = data.x().tr_mul(&self.u_beta);
        let ga = data.z().tr_mul(&self.u_alpha);
        let mut g = DVector::zeros(gb.len() + ga.len());
        g.rows_mut(0, gb.len()).copy_from(&gb);
        g.rows_mut(gb.len(), ga.len()).copy_from(&ga);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult("score"));
        }
        Ok(g)
    }

    /// Observed information `-d^2 l / d theta d theta'`, assembled from the
    /// three weighted Gram blocks. Exactly symmetric.
    pub fn information(&self, data: &SurvivalDataset) -> Result<DMatrix<f64>> {
        let x = data.x();
        let z = data.z();
        let kb = x.ncols();
        let ka = z.ncols();
        let xbb = weighted_gram(x, &self.w_beta, x);
        let xab = weighted_gram(x, &self.w_alpha_beta, z);
        let xaa = weighted_gram(z, &self.w_alpha, z);
        let mut info = DMatrix::zeros(kb + ka, kb + ka);
        for j in 0..kb {
            for i in 0..=j {
                info[(i, j)] = xbb[(i, j)];
                info[(j, i)] = xbb[(i, j)];
            }
        }
        for j in 0..ka {
            for i in 0..=j {
                info[(kb + i, kb + j)] = xaa[(i, j)];
                info[(kb + j, kb + i)] = xaa[(i, j)];
            }
        }
        for i in 0..kb {
            for j in 0..ka {
                info[(i, kb + j)] = xab[(i, j)];
                info[(kb + j, i)] = xab[(i, j)];
            }
        }
        if info.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult("observed information"));
        }
        Ok(info)
    }
}

/// `A' diag(w) B`.
fn weighted_gram(a: &DMatrix<f64>, w: &DVector<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wb = b.clone();
    for (i, mut row) in wb.row_iter_mut().enumerate() {
        row *= w[i];
    }
    a.tr_mul(&wb)
}

/// Log-likelihood only; cheaper than a full workspace evaluation.
pub fn log_likelihood(theta: &ThetaVector, data: &SurvivalDataset) -> Result<f64> {
    theta.check_dims(data)?;
    let eta_x = data.x() * &theta.beta;
    let eta_z = data.z() * &theta.alpha;
    let mut total = 0.0;
    for i in 0..data.n() {
        let log_t = data.log_time()[i];
        let gamma = eta_z[i].exp();
        let h = (eta_x[i] + gamma * log_t).exp();
        if !h.is_finite() {
            return Err(Error::NonFiniteResult("cumulative hazard"));
        }
        total += data.status()[i] * (eta_x[i] + eta_z[i] + (gamma - 1.0) * log_t) - h;
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteResult("log-likelihood"));
    }
    Ok(total)
}

pub fn score(theta: &ThetaVector, data: &SurvivalDataset) -> Result<DVector<f64>> {
    LikelihoodWorkspace::evaluate(theta, data)?.score(data)
}

pub fn observed_information(theta: &ThetaVector, data: &SurvivalDataset) -> Result<DMatrix<f64>> {
    LikelihoodWorkspace::evaluate(theta, data)?.information(data)
}

fn linear_predictors(theta: &ThetaVector, x: &[f64], z: &[f64]) -> Result<(f64, f64)> {
    if x.len() != theta.beta.len() || z.len() != theta.alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "covariate rows have lengths ({}, {}), theta expects ({}, {})",
            x.len(),
            z.len(),
            theta.beta.len(),
            theta.alpha.len()
        )));
    }
    let ex: f64 = x.iter().zip(theta.beta.iter()).map(|(a, b)| a * b).sum();
    let ez: f64 = z.iter().zip(theta.alpha.iter()).map(|(a, b)| a * b).sum();
    Ok((ex, ez))
}

/// `H(t | x, z) = exp(x'beta) t^exp(z'alpha)`. Rows include the leading 1.
pub fn cumulative_hazard(theta: &ThetaVector, t: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidConfig(format!("time must be finite and non-negative, got {t}")));
    }
    let (ex, ez) = linear_predictors(theta, x, z)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let h = (ex + ez.exp() * t.ln()).exp();
    if !h.is_finite() {
        return Err(Error::NonFiniteResult("cumulative hazard"));
    }
    Ok(h)
}

/// `h(t | x, z) = tau gamma t^(gamma - 1)`.
pub fn hazard(theta: &ThetaVector, t: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidConfig(format!("time must be finite and positive, got {t}")));
    }
    let (ex, ez) = linear_predictors(theta, x, z)?;
    let gamma = ez.exp();
    Ok((ex + ez + (gamma - 1.0) * t.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn ones(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn single_subject_hand_values() {
        let d = SurvivalDataset::new(vec![E], vec![1.0], ones(1), ones(1)).unwrap();
        let ll = log_likelihood(&ThetaVector::new(vec![0.0], vec![0.0]), &d).unwrap();
        assert!((ll + E).abs() < 1e-14);

        let d = SurvivalDataset::new(vec![2.0], vec![1.0], ones(1), ones(1)).unwrap();
        let theta = ThetaVector::new(vec![0.0], vec![2f64.ln()]);
        let ll = log_likelihood(&theta, &d).unwrap();
        assert!((ll - (2.0 * 2f64.ln() - 4.0)).abs() < 1e-12);
        let ws = LikelihoodWorkspace::evaluate(&theta, &d).unwrap();
        assert!((ws.loglik - ll).abs() < 1e-15);
    }

    #[test]
    fn exponential_mle_is_stationary_in_intercept() {
        let t = vec![0.5, 1.2, 2.0, 0.3, 4.1];
        let d = vec![1.0, 0.0, 1.0, 1.0, 0.0];
        let beta0 = (d.iter().sum::<f64>() / t.iter().sum::<f64>()).ln();
        let data = SurvivalDataset::new(t, d, ones(5), ones(5)).unwrap();
        let g = score(&ThetaVector::new(vec![beta0], vec![0.0]), &data).unwrap();
        assert!(g[0].abs() < 1e-10);
    }

    #[test]
    fn unit_time_kills_shape_terms() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 1.0, -0.2]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, -1.3, 1.0, 0.5]);
        let data = SurvivalDataset::new(vec![1.0, 1.0], vec![1.0, 0.0], x.clone(), z).unwrap();
        let theta = ThetaVector::new(vec![0.2, -0.4], vec![0.3, 0.9]);
        let g = score(&theta, &data).unwrap();
        // log t = 0, so the shape score reduces to the event indicator times z
        assert!((g[2] - 1.0).abs() < 1e-15);
        assert!((g[3] + 1.3).abs() < 1e-15);

        let info = observed_information(&theta, &data).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect: f64 = (0..2).map(|r| (0.2 - 0.4 * x[(r, 1)]).exp() * x[(r, i)] * x[(r, j)]).sum();
                assert!((info[(i, j)] - expect).abs() < 1e-14);
            }
        }
        for i in 0..4 {
            for j in 2..4 {
                assert_eq!(info[(i, j)], 0.0);
                assert_eq!(info[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn cumulative_hazard_hand_values() {
        let theta = ThetaVector::new(vec![0.0], vec![0.0]);
        assert!((cumulative_hazard(&theta, 3.0, &[1.0], &[1.0]).unwrap() - 3.0).abs() < 1e-14);
        let theta = ThetaVector::new(vec![2f64.ln()], vec![2f64.ln()]);
        assert!((cumulative_hazard(&theta, 2.0, &[1.0], &[1.0]).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(cumulative_hazard(&theta, 0.0, &[1.0], &[1.0]).unwrap(), 0.0);
        assert!(cumulative_hazard(&theta, -1.0, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let data = SurvivalDataset::new(vec![1e10], vec![1.0], ones(1), ones(1)).unwrap();
        let theta = ThetaVector::new(vec![0.0], vec![5.0]);
        assert_eq!(log_likelihood(&theta, &data).unwrap_err().code(), "NonFiniteResult");
        assert_eq!(LikelihoodWorkspace::evaluate(&theta, &data).unwrap_err().code(), "NonFiniteResult");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let data = SurvivalDataset::new(vec![1.0], vec![1.0], ones(1), ones(1)).unwrap();
        let theta = ThetaVector::new(vec![0.0, 1.0], vec![0.0]);
        assert_eq!(log_likelihood(&theta, &data).unwrap_err().code(), "DimensionMismatch");
    }
}
