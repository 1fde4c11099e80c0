//! Least-squares power-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows with `n` below this are left out of exponent fits by default.
pub const DEFAULT_DROP_BELOW: u64 = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// `(ln x, ln y)` for every row used.
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
    pub intercept: f64,
    /// Largest `|ln y − (exponent·ln x + intercept)|`.
    pub max_residual: f64,
}

/// Ordinary least squares of `ln y` on `ln x`.
///
/// Needs at least two rows with distinct `x`; every `x` and `y` must be
/// positive and finite.
pub fn fit_power_law(data: &[(f64, f64)]) -> Result<FitReport> {
    for &(x, y) in data {
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot fit a power law through ({x}, {y})"
            )));
        }
    }
    if data.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: data.len(),
        });
    }
    let points: Vec<(f64, f64)> = data.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let max_residual = points
        .iter()
        .map(|&(lx, ly)| (ly - (exponent * lx + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(FitReport {
        points,
        exponent,
        intercept,
        max_residual,
    })
}
