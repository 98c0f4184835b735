use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use super::CliError;
use crate::data::SurvivalDataset;

/// Dataset read from CSV together with the covariate names used for each
/// component.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: SurvivalDataset,
    pub scale_names: Vec<String>,
    pub shape_names: Vec<String>,
}

/// Reads a comma-separated file with a header row. Only the named columns
/// are parsed; each must be present and hold a finite number in every row.
pub fn read_survival_csv(
    path: &Path,
    time_col: &str,
    status_col: &str,
    scale_covs: &[String],
    shape_covs: &[String],
) -> Result<LoadedData, CliError> {
    if !path.exists() {
        return Err(CliError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Parse { row: 1, column: String::new(), message: e.to_string() })?
        .clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let lookup = |name: &str| -> Result<usize, CliError> {
        index.get(name).copied().ok_or_else(|| CliError::Parse {
            row: 1,
            column: name.to_string(),
            message: "column not found in header".into(),
        })
    };
    let t_idx = lookup(time_col)?;
    let d_idx = lookup(status_col)?;
    let x_idx = scale_covs.iter().map(|c| lookup(c)).collect::<Result<Vec<_>, _>>()?;
    let z_idx = shape_covs.iter().map(|c| lookup(c)).collect::<Result<Vec<_>, _>>()?;

    let mut time = Vec::new();
    let mut status = Vec::new();
    let mut x_vals = Vec::new();
    let mut z_vals = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let row = i + 2;
        let record = record.map_err(|e| CliError::Parse { row, column: String::new(), message: e.to_string() })?;
        let field = |idx: usize, name: &str| -> Result<f64, CliError> {
            let raw = record.get(idx).unwrap_or("");
            if raw.is_empty() {
                return Err(CliError::Parse { row, column: name.to_string(), message: "missing value".into() });
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Parse {
                    row,
                    column: name.to_string(),
                    message: format!("not a finite number: {raw:?}"),
                }),
            }
        };
        time.push(field(t_idx, time_col)?);
        status.push(field(d_idx, status_col)?);
        for (&idx, name) in x_idx.iter().zip(scale_covs) {
            x_vals.push(field(idx, name)?);
        }
        for (&idx, name) in z_idx.iter().zip(shape_covs) {
            z_vals.push(field(idx, name)?);
        }
    }
    let n = time.len();
    if n == 0 {
        return Err(CliError::Parse { row: 2, column: String::new(), message: "no data rows".into() });
    }
    let x = DMatrix::from_row_slice(n, scale_covs.len(), &x_vals);
    let z = DMatrix::from_row_slice(n, shape_covs.len(), &z_vals);
    let data = SurvivalDataset::from_covariates(time, status, &x, &z).map_err(CliError::Library)?;
    Ok(LoadedData { data, scale_names: scale_covs.to_vec(), shape_names: shape_covs.to_vec() })
}
