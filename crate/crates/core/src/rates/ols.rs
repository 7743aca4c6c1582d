use serde::{Deserialize, Serialize};

use super::RatesError;

/// Simple least-squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub n: usize,
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    /// Residual variance, RSS / (n - 2).
    pub sigma2: f64,
    pub rss: f64,
    pub r_squared: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit, RatesError> {
    let n = x.len();
    if n != y.len() {
        return Err(RatesError::LengthMismatch(n, y.len()));
    }
    if n < 3 {
        return Err(RatesError::TooFewPoints { need: 3, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(RatesError::NonFinite);
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(RatesError::RankDeficient);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let sigma2 = rss / (nf - 2.0);
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    Ok(OlsFit {
        n,
        intercept,
        slope,
        intercept_se: (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        slope_se: (sigma2 / sxx).sqrt(),
        sigma2,
        rss,
        r_squared,
    })
}
