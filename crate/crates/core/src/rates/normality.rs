//! Normality tests: D'Agostino-Pearson K², Kolmogorov-Smirnov against a
//! fitted normal, and Anderson-Darling with estimated parameters.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::RatesError;

pub const MIN_TEST_SAMPLES: usize = 20;

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagostinoResult {
    pub statistic: f64,
    pub p_value: f64,
    pub skew_z: f64,
    pub kurtosis_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndersonResult {
    pub statistic: f64,
    /// Significance levels in percent.
    pub significance_levels: Vec<f64>,
    pub critical_values: Vec<f64>,
    /// Approximate p-value from the modified statistic.
    pub p_value: f64,
}

impl AndersonResult {
    /// Whether normality is rejected at `level` percent, which must be one
    /// of the tabulated significance levels.
    pub fn rejects_at(&self, level: f64) -> Option<bool> {
        self.significance_levels
            .iter()
            .position(|&s| (s - level).abs() < 1e-9)
            .map(|i| self.statistic > self.critical_values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: usize,
    pub dagostino: DagostinoResult,
    pub kolmogorov_smirnov: KsResult,
    pub anderson_darling: AndersonResult,
}

impl NormalityReport {
    /// Rejections by (D'Agostino, KS, Anderson-Darling) at `alpha`, which
    /// must be 0.15, 0.10, 0.05, 0.025 or 0.01 for the Anderson-Darling table.
    pub fn rejects(&self, alpha: f64) -> [bool; 3] {
        [
            self.dagostino.p_value < alpha,
            self.kolmogorov_smirnov.p_value < alpha,
            self.anderson_darling.rejects_at(alpha * 100.0).unwrap_or(self.anderson_darling.p_value < alpha),
        ]
    }
}

fn central_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m, m2 / n, m3 / n, m4 / n)
}

fn skew_z(n: f64, b1: f64) -> f64 {
    let y = b1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    let ya = y / alpha;
    delta * (ya + (ya * ya + 1.0).sqrt()).ln()
}

fn kurtosis_z(n: f64, b2: f64) -> f64 {
    let e = 3.0 * (n - 1.0) / (n + 1.0);
    let var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let x = (b2 - e) / var_b2.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let denom = 1.0 + x * (2.0 / (a - 4.0)).sqrt();
    let term2 = if denom == 0.0 {
        99.0
    } else {
        denom.signum() * ((1.0 - 2.0 / a) / denom.abs()).cbrt()
    };
    (term1 - term2) / (2.0 / (9.0 * a)).sqrt()
}

/// Omnibus test combining the skewness and kurtosis z-scores; K² is
/// chi-squared with two degrees of freedom, so p = exp(-K²/2).
pub fn dagostino_k2(samples: &[f64]) -> DagostinoResult {
    let n = samples.len() as f64;
    let (_, m2, m3, m4) = central_moments(samples);
    let zs = skew_z(n, m3 / m2.powf(1.5));
    let zk = kurtosis_z(n, m4 / (m2 * m2));
    let k2 = zs * zs + zk * zk;
    DagostinoResult {
        statistic: k2,
        p_value: (-k2 / 2.0).exp(),
        skew_z: zs,
        kurtosis_z: zk,
    }
}

/// Asymptotic Kolmogorov distribution survival function.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS distance to the normal with maximum-likelihood mean and std. The
/// p-value uses the Kolmogorov limit with the Stephens small-sample
/// correction; it ignores that parameters were estimated, which makes the
/// test conservative.
pub fn kolmogorov_smirnov_normal(samples: &[f64]) -> KsResult {
    let n = samples.len();
    let (mean, m2, _, _) = central_moments(samples);
    let std = m2.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = norm_cdf((x - mean) / std);
            (f - i as f64 / nf).max((i as f64 + 1.0) / nf - f)
        })
        .fold(0.0, f64::max);
    let sn = nf.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        mean,
        std,
    }
}

pub const AD_SIGNIFICANCE: [f64; 5] = [15.0, 10.0, 5.0, 2.5, 1.0];
const AD_CRITICAL: [f64; 5] = [0.576, 0.656, 0.787, 0.918, 1.092];

/// Anderson-Darling A² with mean and sample std estimated from the data.
/// Critical values are the case-3 table scaled by 1 / (1 + 4/n - 25/n²);
/// the p-value uses D'Agostino and Stephens' piecewise approximation on
/// A²(1 + 0.75/n + 2.25/n²).
pub fn anderson_darling_normal(samples: &[f64]) -> AndersonResult {
    let n = samples.len();
    let nf = n as f64;
    let (mean, m2, _, _) = central_moments(samples);
    let std = (m2 * nf / (nf - 1.0)).sqrt();
    let mut w: Vec<f64> = samples.iter().map(|&x| (x - mean) / std).collect();
    w.sort_by(f64::total_cmp);
    let mut s = 0.0;
    for i in 0..n {
        // ln(1 - Phi(w)) computed as ln(Phi(-w)) to keep the tail exact.
        let lo = norm_cdf(w[i]).ln();
        let hi = norm_cdf(-w[n - 1 - i]).ln();
        s += (2.0 * i as f64 + 1.0) * (lo + hi);
    }
    let a2 = -nf - s / nf;
    let scale = 1.0 + 4.0 / nf - 25.0 / (nf * nf);
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    AndersonResult {
        statistic: a2,
        significance_levels: AD_SIGNIFICANCE.to_vec(),
        critical_values: AD_CRITICAL.iter().map(|c| c / scale).collect(),
        p_value: p.clamp(0.0, 1.0),
    }
}

pub fn normality_tests(samples: &[f64]) -> Result<NormalityReport, RatesError> {
    if samples.len() < MIN_TEST_SAMPLES {
        return Err(RatesError::TooFewPoints {
            need: MIN_TEST_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(RatesError::NonFinite);
    }
    let (_, m2, _, _) = central_moments(samples);
    if m2 <= 0.0 {
        return Err(RatesError::ZeroVariance);
    }
    Ok(NormalityReport {
        n: samples.len(),
        dagostino: dagostino_k2(samples),
        kolmogorov_smirnov: kolmogorov_smirnov_normal(samples),
        anderson_darling: anderson_darling_normal(samples),
    })
}
