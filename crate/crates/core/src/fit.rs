use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits a line to `points`, in `(log x, log y)` when `log_log` is set.
pub fn fit_exponent(points: &[(f64, f64)], log_log: bool) -> Result<LineFit> {
    if points.len() < 3 {
        return Err(CarnotError::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if log_log {
            if !(x > 0.0 && y > 0.0) {
                return Err(CarnotError::DegenerateFit(format!(
                    "non-positive value ({x}, {y}) in log-log mode"
                )));
            }
            xs.push(x.ln());
            ys.push(y.ln());
        } else {
            xs.push(x);
            ys.push(y);
        }
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 1e-300 || !sxx.is_finite() {
        return Err(CarnotError::DegenerateFit("abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LineFit { slope, intercept, r2 })
}
