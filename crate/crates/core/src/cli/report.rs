use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::diagnostics::WeibullCheck;
use crate::penalty::{PenaltyFamily, TuningMode};
use crate::simulation::SimReport;

pub const SCHEMA_VERSION: u32 = 1;

/// One coefficient of a fitted model on both the standardized and the
/// original covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    /// `scale` or `shape`.
    pub component: &'static str,
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    /// Two-sided test at the 5% level.
    pub significant: Option<bool>,
    pub selected: bool,
    pub estimate_standardized: f64,
    pub std_error_standardized: Option<f64>,
}

impl CoefficientRow {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        component: &'static str,
        name: String,
        estimate: f64,
        std_error: Option<f64>,
        selected: bool,
        estimate_standardized: f64,
        std_error_standardized: Option<f64>,
    ) -> Self {
        let std_error = std_error.filter(|s| s.is_finite());
        let z = std_error.filter(|s| *s > 0.0).map(|s| estimate / s);
        let normal = Normal::standard();
        let p_value = z.map(|z| 2.0 * normal.sf(z.abs()));
        CoefficientRow {
            component,
            name,
            estimate,
            std_error,
            z,
            p_value,
            significant: p_value.map(|p| p < 0.05),
            selected,
            estimate_standardized,
            std_error_standardized: std_error_standardized.filter(|s| s.is_finite()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionInfo {
    pub lambda_star: Vec<f64>,
    pub bic: f64,
    pub selected_scale: Vec<String>,
    pub selected_shape: Vec<String>,
    pub n_inner_fits: usize,
    pub bic_trace: Vec<f64>,
}

/// Output of `fit` and `select`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub n: usize,
    pub n_events: usize,
    pub penalty: PenaltyFamily,
    pub tuning_mode: Option<TuningMode>,
    pub lambda: Vec<f64>,
    pub converged: bool,
    pub n_iter: usize,
    pub loglik: f64,
    pub penalized_loglik: f64,
    pub bic: Option<f64>,
    pub effective_df: Option<f64>,
    pub effective_df_scale: Option<f64>,
    pub effective_df_shape: Option<f64>,
    pub coefficients: Vec<CoefficientRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionInfo>,
}

impl ModelReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "component,name,estimate,std_error,z,p_value,significant,selected,estimate_standardized,std_error_standardized\n",
        );
        for c in &self.coefficients {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                c.component,
                csv_text(&c.name),
                c.estimate,
                opt(c.std_error),
                opt(c.z),
                opt(c.p_value),
                c.significant.map(|b| b.to_string()).unwrap_or_default(),
                c.selected,
                c.estimate_standardized,
                opt(c.std_error_standardized),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub command: &'static str,
    #[serde(flatten)]
    pub report: SimReport,
}

impl SimulationReport {
    /// Long format: one `(component, coefficient, metric, value)` row per
    /// reported number.
    pub fn to_csv(&self) -> String {
        let r = &self.report;
        let mut out = String::from("component,coefficient,metric,value\n");
        let mut row = |component: &str, coefficient: &str, metric: &str, value: f64| {
            out.push_str(&format!("{component},{coefficient},{metric},{value}\n"));
        };
        row("all", "", "censoring_rate", r.censoring_rate);
        row("all", "", "realized_censoring", r.realized_censoring);
        row("all", "", "n_succeeded", r.n_succeeded as f64);
        row("all", "", "n_failed", r.n_failed as f64);
        if let Some(t) = r.mean_wall_time_secs {
            row("all", "", "mean_wall_time_secs", t);
        }
        for (name, m) in [("scale", &r.scale), ("shape", &r.shape)] {
            row(name, "", "C", m.c);
            row(name, "", "IC", m.ic);
            row(name, "", "PT", m.pt);
            row(name, "", "MSE", m.mse);
        }
        for c in &r.coefficients {
            let component = if c.name.starts_with("beta") { "scale" } else { "shape" };
            row(component, &c.name, "truth", c.truth);
            row(component, &c.name, "estimate", c.mean_estimate);
            row(component, &c.name, "SE", c.se);
            row(component, &c.name, "SEE", c.see);
            row(component, &c.name, "CP", c.cp);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub n: usize,
    pub n_events: usize,
    pub n_points: usize,
    #[serde(flatten)]
    pub check: WeibullCheck,
}

impl KmReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("log_t,log_H,ci_lo,ci_hi\n");
        for p in &self.check.points {
            out.push_str(&format!("{},{},{},{}\n", p.log_t, p.log_h, p.ci_lo, p.ci_hi));
        }
        out
    }

    pub fn summary_line(&self) -> String {
        format!(
            "slope={} intercept={} r_squared={} points={}",
            self.check.slope, self.check.intercept, self.check.r_squared, self.n_points
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
