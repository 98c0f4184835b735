//! Survival data containers, validation and covariate standardization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Right-censored survival data with separate scale (`X`) and shape (`Z`)
/// design matrices. Both matrices carry an intercept column of ones first.
///
/// Construction validates every invariant, so a `SurvivalDataset` in hand is
/// always usable by the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    time: Vec<f64>,
    status: Vec<f64>,
    log_time: Vec<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl SurvivalDataset {
    /// Builds and validates a dataset from full design matrices (intercept
    /// column included).
    pub fn new(time: Vec<f64>, status: Vec<f64>, x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        validate(&time, &status, &x, &z)?;
        let log_time = time.iter().map(|t| t.ln()).collect();
        Ok(SurvivalDataset { time, status, log_time, x, z })
    }

    /// Builds a dataset from covariate matrices without intercepts; a column of
    /// ones is prepended to each.
    pub fn from_covariates(
        time: Vec<f64>,
        status: Vec<f64>,
        x_cov: &DMatrix<f64>,
        z_cov: &DMatrix<f64>,
    ) -> Result<Self> {
        let n = time.len();
        if x_cov.nrows() != n || z_cov.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} times but covariate matrices have {} and {} rows",
                n,
                x_cov.nrows(),
                z_cov.nrows()
            )));
        }
        SurvivalDataset::new(time, status, with_intercept(x_cov), with_intercept(z_cov))
    }

    pub fn n(&self) -> usize {
        self.time.len()
    }

    /// Number of non-intercept scale covariates.
    pub fn p(&self) -> usize {
        self.x.ncols() - 1
    }

    /// Number of non-intercept shape covariates.
    pub fn q(&self) -> usize {
        self.z.ncols() - 1
    }

    /// Length of the flattened parameter vector, `p + q + 2`.
    pub fn n_params(&self) -> usize {
        self.x.ncols() + self.z.ncols()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn status(&self) -> &[f64] {
        &self.status
    }

    pub fn log_time(&self) -> &[f64] {
        &self.log_time
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&d| d == 1.0).count()
    }
}

fn with_intercept(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cov.nrows();
    let mut m = DMatrix::from_element(n, cov.ncols() + 1, 1.0);
    m.columns_mut(1, cov.ncols()).copy_from(cov);
    m
}

fn validate(time: &[f64], status: &[f64], x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<()> {
    let n = time.len();
    if status.len() != n || x.nrows() != n || z.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "time has {} entries, status {}, X {} rows, Z {} rows",
            n,
            status.len(),
            x.nrows(),
            z.nrows()
        )));
    }
    if n == 0 || x.ncols() == 0 || z.ncols() == 0 {
        return Err(Error::DimensionMismatch("empty dataset or design matrix".into()));
    }
    for (row, &t) in time.iter().enumerate() {
        if !t.is_finite() {
            if t.is_nan() {
                return Err(Error::NonFiniteInput { what: "time", row });
            }
            if t < 0.0 {
                return Err(Error::NonPositiveTime { row, value: t });
            }
            return Err(Error::NonFiniteInput { what: "time", row });
        }
        if t <= 0.0 {
            return Err(Error::NonPositiveTime { row, value: t });
        }
    }
    for (row, &d) in status.iter().enumerate() {
        if d != 0.0 && d != 1.0 {
            return Err(Error::BadIndicator { row, value: d });
        }
    }
    for (name, m) in [("X", x), ("Z", z)] {
        for row in 0..n {
            if m.row(row).iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput { what: name, row });
            }
        }
        if m.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::MissingIntercept(if name == "X" { "X" } else { "Z" }));
        }
    }
    if !status.contains(&1.0) {
        return Err(Error::NoEvents);
    }
    for (name, m) in [("X", x), ("Z", z)] {
        for j in 1..m.ncols() {
            let col = m.column(j);
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(Error::ConstantColumnNotIntercept {
                    matrix: if name == "X" { "X" } else { "Z" },
                    column: j,
                });
            }
        }
    }
    Ok(())
}

/// Regression coefficients for the scale (`beta`) and shape (`alpha`)
/// components. Index 0 of each is the intercept. Flattened order is always
/// `(beta_0..beta_p, alpha_0..alpha_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector {
    pub beta: DVector<f64>,
    pub alpha: DVector<f64>,
}

impl ThetaVector {
    pub fn new(beta: Vec<f64>, alpha: Vec<f64>) -> Self {
        ThetaVector { beta: DVector::from_vec(beta), alpha: DVector::from_vec(alpha) }
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        ThetaVector { beta: DVector::zeros(p + 1), alpha: DVector::zeros(q + 1) }
    }

    pub fn len(&self) -> usize {
        self.beta.len() + self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        v.rows_mut(0, self.beta.len()).copy_from(&self.beta);
        v.rows_mut(self.beta.len(), self.alpha.len()).copy_from(&self.alpha);
        v
    }

    /// Splits a flat vector with `n_beta` leading scale entries.
    pub fn from_flat(flat: &DVector<f64>, n_beta: usize) -> Self {
        ThetaVector {
            beta: flat.rows(0, n_beta).into_owned(),
            alpha: flat.rows(n_beta, flat.len() - n_beta).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.beta.iter().chain(self.alpha.iter()).all(|v| v.is_finite())
    }

    pub(crate) fn check_dims(&self, data: &SurvivalDataset) -> Result<()> {
        if self.beta.len() != data.p() + 1 || self.alpha.len() != data.q() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "theta has ({}, {}) entries, data expects ({}, {})",
                self.beta.len(),
                self.alpha.len(),
                data.p() + 1,
                data.q() + 1
            )));
        }
        Ok(())
    }
}

/// Column means and sample standard deviations of the non-intercept columns
/// of `X` and `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationRecord {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub z_mean: Vec<f64>,
    pub z_sd: Vec<f64>,
    pub applied: bool,
}

impl StandardizationRecord {
    /// The identity transform for a dataset with `p` scale and `q` shape
    /// covariates.
    pub fn identity(p: usize, q: usize) -> Self {
        StandardizationRecord {
            x_mean: vec![0.0; p],
            x_sd: vec![1.0; p],
            z_mean: vec![0.0; q],
            z_sd: vec![1.0; q],
            applied: false,
        }
    }

    /// Linear map taking standardized-scale coefficients of one component to
    /// the original scale.
    fn component_map(mean: &[f64], sd: &[f64]) -> DMatrix<f64> {
        let k = mean.len() + 1;
        let mut a = DMatrix::identity(k, k);
        for j in 0..mean.len() {
            a[(j + 1, j + 1)] = 1.0 / sd[j];
            a[(0, j + 1)] = -mean[j] / sd[j];
        }
        a
    }

    /// Full `(p+q+2)` square map from standardized to original coefficients.
    pub fn coefficient_map(&self) -> DMatrix<f64> {
        let kb = self.x_mean.len() + 1;
        let ka = self.z_mean.len() + 1;
        let mut a = DMatrix::zeros(kb + ka, kb + ka);
        a.view_mut((0, 0), (kb, kb)).copy_from(&Self::component_map(&self.x_mean, &self.x_sd));
        a.view_mut((kb, kb), (ka, ka)).copy_from(&Self::component_map(&self.z_mean, &self.z_sd));
        a
    }
}

fn column_moments(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = if col.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

fn standardize_matrix(m: &DMatrix<f64>, name: &'static str) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let mut out = m.clone();
    let mut means = Vec::with_capacity(m.ncols() - 1);
    let mut sds = Vec::with_capacity(m.ncols() - 1);
    for j in 1..m.ncols() {
        let col: Vec<f64> = m.column(j).iter().copied().collect();
        let (mean, sd) = column_moments(&col);
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::ConstantColumnNotIntercept { matrix: name, column: j });
        }
        for v in out.column_mut(j).iter_mut() {
            *v = (*v - mean) / sd;
        }
        means.push(mean);
        sds.push(sd);
    }
    Ok((out, means, sds))
}

/// Centers and scales every non-intercept column of `X` and `Z` to sample
/// mean 0 and sample sd 1 (denominator `n - 1`).
pub fn standardize(data: &SurvivalDataset) -> Result<(SurvivalDataset, StandardizationRecord)> {
    let (x, x_mean, x_sd) = standardize_matrix(data.x(), "X")?;
    let (z, z_mean, z_sd) = standardize_matrix(data.z(), "Z")?;
    let out =
        SurvivalDataset { time: data.time.clone(), status: data.status.clone(), log_time: data.log_time.clone(), x, z };
    Ok((out, StandardizationRecord { x_mean, x_sd, z_mean, z_sd, applied: true }))
}

/// Maps coefficients fitted on standardized covariates back to the original
/// covariate scale, so that linear predictors are unchanged.
pub fn destandardize_theta(theta: &ThetaVector, record: &StandardizationRecord) -> Result<ThetaVector> {
    if theta.beta.len() != record.x_mean.len() + 1 || theta.alpha.len() != record.z_mean.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "theta has ({}, {}) entries, record describes ({}, {}) covariates",
            theta.beta.len(),
            theta.alpha.len(),
            record.x_mean.len(),
            record.z_mean.len()
        )));
    }
    let back = |coef: &DVector<f64>, mean: &[f64], sd: &[f64]| {
        let mut out = coef.clone();
        let mut intercept = coef[0];
        for j in 0..mean.len() {
            let slope = coef[j + 1] / sd[j];
            out[j + 1] = slope;
            intercept -= slope * mean[j];
        }
        out[0] = intercept;
        out
    };
    Ok(ThetaVector {
        beta: back(&theta.beta, &record.x_mean, &record.x_sd),
        alpha: back(&theta.alpha, &record.z_mean, &record.z_sd),
    })
}

/// Transforms a standardized-scale covariance matrix to the original scale.
pub fn destandardize_covariance(cov: &DMatrix<f64>, record: &StandardizationRecord) -> Result<DMatrix<f64>> {
    let a = record.coefficient_map();
    if cov.nrows() != a.nrows() || cov.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, record describes {} parameters",
            cov.nrows(),
            cov.ncols(),
            a.nrows()
        )));
    }
    let m = &a * cov * a.transpose();
    Ok((&m + m.transpose()) * 0.5)
}
