//! Ordinary least squares on log–log data.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    /// Exponent of the fitted law y ≈ C x^slope.
    pub slope: f64,
    /// ln C.
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Coefficient of determination of the log–log regression.
    pub r_squared: f64,
    pub samples: usize,
}

impl PowerFit {
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }

    /// Two-sided interval for C using ±2 standard errors of the intercept.
    pub fn constant_interval(&self) -> (f64, f64) {
        (
            (self.intercept - 2.0 * self.intercept_stderr).exp(),
            (self.intercept + 2.0 * self.intercept_stderr).exp(),
        )
    }
}

/// Fits ln y = intercept + slope ln x over strictly positive samples.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::FitRejected(format!("need at least 3 positive samples, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitRejected("abscissae are all equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    let s2 = rss / (nf - 2.0);
    Ok(PowerFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        r_squared,
        samples: n,
    })
}

/// `n` points spaced geometrically from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| lo * (r * k as f64).exp()).collect()
}
