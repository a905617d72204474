use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gap_integrals::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// `ln y = slope ln eps + intercept`.
    Power,
    /// `ln y = slope ln|ln eps| + intercept`.
    Log,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    /// Residuals in the fitted (logarithmic) coordinates, in input order.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub points: usize,
}

/// Least-squares rate fit of `(eps, y)` pairs.
pub fn fit_rate(table: &[(f64, f64)], model: FitModel) -> Result<RateFit> {
    if table.len() < 3 {
        return invalid(format!("a rate fit needs at least 3 points, got {}", table.len()));
    }
    let mut xs = Vec::with_capacity(table.len());
    let mut ys = Vec::with_capacity(table.len());
    for &(eps, y) in table {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("separation {eps} outside (0, 1)"));
        }
        if !(y > 0.0) || !y.is_finite() {
            return invalid(format!("observable {y} at eps = {eps} is not positive; logarithmic fits need y > 0"));
        }
        xs.push(match model {
            FitModel::Power => eps.ln(),
            FitModel::Log => eps.ln().abs().ln(),
        });
        ys.push(y.ln());
    }
    if xs.iter().all(|x| (x - xs[0]).abs() < 1e-14) {
        return invalid("rate fit needs distinct separations");
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(RateFit { model, slope, intercept, residuals, rms, points: table.len() })
}
