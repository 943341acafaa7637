//! Ordinary least squares for log-log slope fits.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for two points or an exact line).
    pub stderr: f64,
    pub r2: f64,
}

/// Fits `y = slope·x + intercept`. Needs at least three finite points and
/// nonzero spread in `x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension { expected: xs.len(), found: ys.len() });
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::input("points", format!("need at least 3 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::input("points", "non-finite coordinate"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= f64::EPSILON * nf * (1.0 + mx * mx) {
        return Err(Error::Degenerate("x values have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let stderr = (sse.max(0.0) / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit { slope, intercept, stderr, r2 })
}
