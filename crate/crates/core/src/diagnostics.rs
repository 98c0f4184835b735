//! Kaplan-Meier estimation and the log cumulative hazard check for a
//! baseline Weibull model: under a Weibull law `log H(t)` is linear in
//! `log t` with slope equal to the shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMCurve {
    /// Distinct event times, ascending.
    pub times: Vec<f64>,
    pub n_risk: Vec<usize>,
    pub n_event: Vec<usize>,
    pub survival: Vec<f64>,
    /// Greenwood variance of the survival estimate.
    pub greenwood_var: Vec<f64>,
    /// `-log S(t)`.
    pub cum_hazard: Vec<f64>,
    /// Pointwise 95% interval for `H(t)`, symmetric on the `log H` scale.
    /// Infinite where `S(t) = 0`, undefined (NaN) where `H(t) = 0`.
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
}

/// Product-limit estimator over the distinct event times.
pub fn kaplan_meier(time: &[f64], status: &[f64]) -> Result<KMCurve> {
    if time.len() != status.len() {
        return Err(Error::DimensionMismatch(format!("{} times but {} status values", time.len(), status.len())));
    }
    for (row, &d) in status.iter().enumerate() {
        if d != 0.0 && d != 1.0 {
            return Err(Error::BadIndicator { row, value: d });
        }
    }
    for (row, &t) in time.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFiniteInput { what: "time", row });
        }
    }
    let mut order: Vec<usize> = (0..time.len()).collect();
    order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));

    let mut curve = KMCurve {
        times: Vec::new(),
        n_risk: Vec::new(),
        n_event: Vec::new(),
        survival: Vec::new(),
        greenwood_var: Vec::new(),
        cum_hazard: Vec::new(),
        ci_lower: Vec::new(),
        ci_upper: Vec::new(),
    };
    let mut at_risk = time.len();
    let mut surv = 1.0;
    let mut greenwood_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = time[order[i]];
        let mut events = 0;
        let mut leaving = 0;
        while i < order.len() && time[order[i]] == t {
            if status[order[i]] == 1.0 {
                events += 1;
            }
            leaving += 1;
            i += 1;
        }
        if events > 0 {
            let r = at_risk as f64;
            let d = events as f64;
            surv *= 1.0 - d / r;
            greenwood_sum += if events < at_risk { d / (r * (r - d)) } else { f64::INFINITY };
            let h = -surv.ln();
            let (lo, hi) = if surv == 0.0 {
                (f64::INFINITY, f64::INFINITY)
            } else if h > 0.0 {
                let half = Z_975 * greenwood_sum.sqrt() / h;
                (h * (-half).exp(), h * half.exp())
            } else {
                (f64::NAN, f64::NAN)
            };
            curve.times.push(t);
            curve.n_risk.push(at_risk);
            curve.n_event.push(events);
            curve.survival.push(surv);
            curve.greenwood_var.push(if surv == 0.0 { 0.0 } else { surv * surv * greenwood_sum });
            curve.cum_hazard.push(if surv == 0.0 { f64::INFINITY } else { h.max(0.0) });
            curve.ci_lower.push(lo);
            curve.ci_upper.push(hi);
        }
        at_risk -= leaving;
    }
    if curve.times.is_empty() {
        return Err(Error::NoEvents);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckPoint {
    pub log_t: f64,
    pub log_h: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullCheck {
    pub points: Vec<CheckPoint>,
    /// Estimates the Weibull shape.
    pub slope: f64,
    /// Estimates the log of the Weibull scale.
    pub intercept: f64,
    pub r_squared: f64,
}

/// `(log t, log H(t))` points with `0 < S(t) < 1`, and their least-squares
/// line.
pub fn weibull_check_points(curve: &KMCurve) -> Result<WeibullCheck> {
    let points: Vec<CheckPoint> = curve
        .times
        .iter()
        .zip(&curve.survival)
        .enumerate()
        .filter(|(_, (t, s))| **s > 0.0 && **s < 1.0 && **t > 0.0)
        .map(|(k, (t, _))| CheckPoint {
            log_t: t.ln(),
            log_h: curve.cum_hazard[k].ln(),
            ci_lo: curve.ci_lower[k].ln(),
            ci_hi: curve.ci_upper[k].ln(),
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.log_t).sum::<f64>() / m;
    let my = points.iter().map(|p| p.log_h).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.log_t - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.log_t - mx) * (p.log_h - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.log_h - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(WeibullCheck { points, slope, intercept, r_squared })
}
