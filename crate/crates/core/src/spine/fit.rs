//! Fits of `log theta = intercept + slope / sqrt(control)`, where the control
//! is `p - p_c` or the family parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    Percolation,
    Family,
}

/// Fits below this r² are flagged.
pub const MIN_R2: f64 = 0.9;
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub mode: FitMode,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points_used: usize,
    /// Points with no observed survival or a nonpositive control.
    pub dropped: Vec<(f64, f64)>,
    pub reliable: bool,
}

/// Unweighted least squares of `ln theta` on `control^{-1/2}`.
pub fn fit_decay(points: &[(f64, f64)], mode: FitMode) -> Result<FitResult> {
    let (kept, dropped): (Vec<_>, Vec<_>) =
        points.iter().copied().partition(|(c, t)| *c > 0.0 && *t > 0.0 && c.is_finite() && t.is_finite());
    if kept.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points, need {MIN_POINTS} ({} dropped)",
            kept.len(),
            dropped.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|(c, _)| c.powf(-0.5)).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, t)| t.ln()).collect();
    let fit = least_squares(&xs, &ys)
        .ok_or_else(|| Error::InsufficientData("controls are all equal".into()))?;
    Ok(FitResult {
        mode,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        points_used: kept.len(),
        dropped,
        reliable: fit.r2 >= MIN_R2,
    })
}
