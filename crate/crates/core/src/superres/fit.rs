//! Log-log power-law fits for scaling checks.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual in natural-log units.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of `ln y = slope · ln x + intercept`.
pub fn scaling_exponent_fit(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    if x.len() != y.len() {
        return Err(Error::Dimension { context: "scaling fit", expected: x.len(), got: y.len() });
    }
    if x.len() < 4 {
        return Err(Error::Validation(format!("scaling fit needs at least 4 samples, got {}", x.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("scaling fit needs positive finite values, got {v}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation("scaling fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(ScalingFit { slope, intercept, residual: (ss / n).sqrt(), samples: x.len() })
}
