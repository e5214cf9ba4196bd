//! Log-log rate fits.

use crate::error::{Error, Result};

use super::sweep::RiskReport;

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Grid sizes entering the fit.
    pub used: Vec<usize>,
    /// Grid sizes dropped for non-positive excess.
    pub excluded: Vec<usize>,
}

/// Ordinary least squares of `ln value` on `ln n`, skipping non-positive
/// values. Needs three usable points.
pub fn fit_log_slope_points(ns: &[usize], values: &[f64]) -> Result<SlopeFit> {
    if ns.len() != values.len() {
        return Err(Error::LengthMismatch {
            points: ns.len(),
            labels: values.len(),
        });
    }
    let (mut used, mut excluded) = (Vec::new(), Vec::new());
    let mut xy = Vec::new();
    for (&n, &v) in ns.iter().zip(values) {
        if v > 0.0 && n > 0 {
            used.push(n);
            xy.push(((n as f64).ln(), v.ln()));
        } else {
            excluded.push(n);
        }
    }
    if xy.len() < 3 {
        return Err(Error::TooFewPoints(xy.len()));
    }
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
        used,
        excluded,
    })
}

/// Fits the per-n mean excess of a sweep.
pub fn fit_log_slope(report: &RiskReport) -> Result<SlopeFit> {
    let ns: Vec<usize> = report.grid.iter().map(|g| g.n).collect();
    let values: Vec<f64> = report.grid.iter().map(|g| g.mean_excess).collect();
    fit_log_slope_points(&ns, &values)
}
