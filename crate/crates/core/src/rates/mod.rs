//! Improvement-rate model and the statistics run over its estimates.
//!
//! The model is log-linear in mean normalized centrality X:
//! `ln K = intercept + slope * X + e`, retransformed with the smearing
//! factor `exp(sigma2 / 2)`.

pub mod dist;
pub mod normality;
pub mod ols;
pub mod optimize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dist::{fit_distribution, Family, FitParams, FitResult};
pub use normality::{normality_tests, NormalityReport};
pub use ols::{ols, OlsFit};

#[derive(Debug, Error, PartialEq)]
pub enum RatesError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("all regressor values are equal; slope is not identifiable")]
    RankDeficient,
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("initial performance must be positive, got {0}")]
    NonPositivePerformance(f64),
    #[error("sigma2 must be finite and non-negative, got {0}")]
    BadSigma2(f64),
    #[error("{} fit failed: {reason}", family.as_str())]
    FitFailed { family: Family, reason: String },
    #[error("domain codes differ between estimate sets: {0}")]
    CodeMismatch(String),
}

pub const PUBLISHED_SLOPE: f64 = 6.217219;
pub const PUBLISHED_INTERCEPT: f64 = -4.974221;
/// Number of technologies behind the published coefficients.
pub const PUBLISHED_N_TRAIN: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub slope: f64,
    pub intercept: f64,
    /// Residual variance of the log-scale regression.
    pub sigma2: f64,
    pub n_train: usize,
    pub provenance: String,
}

impl Default for RegressionModel {
    fn default() -> Self {
        RegressionModel {
            slope: PUBLISHED_SLOPE,
            intercept: PUBLISHED_INTERCEPT,
            sigma2: 0.0,
            n_train: PUBLISHED_N_TRAIN,
            provenance: "published coefficients from a 30-technology training set; sigma2 not published".into(),
        }
    }
}

impl RegressionModel {
    pub fn with_sigma2(mut self, sigma2: f64) -> Result<Self, RatesError> {
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(RatesError::BadSigma2(sigma2));
        }
        self.sigma2 = sigma2;
        Ok(self)
    }

    /// `K = exp(slope * X + intercept) * exp(sigma2 / 2)`.
    pub fn estimate_k(&self, x: f64) -> Result<f64, RatesError> {
        if !x.is_finite() {
            return Err(RatesError::NonFinite);
        }
        Ok((self.slope * x + self.intercept).exp() * (self.sigma2 / 2.0).exp())
    }

    /// `X = (ln K - sigma2 / 2 - intercept) / slope`.
    pub fn invert_k(&self, k: f64) -> Result<f64, RatesError> {
        if !(k > 0.0) {
            return Err(RatesError::NonPositiveRate(k));
        }
        Ok((k.ln() - self.sigma2 / 2.0 - self.intercept) / self.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub domain_code: String,
    pub x: f64,
    pub k: f64,
    pub scored_patent_count: usize,
    /// X outside [0, 1]; estimated anyway.
    pub x_out_of_range: bool,
}

pub fn estimate_rate(model: &RegressionModel, domain_code: &str, x: f64, scored_patent_count: usize) -> Result<RateEstimate, RatesError> {
    Ok(RateEstimate {
        domain_code: domain_code.to_string(),
        x,
        k: model.estimate_k(x)?,
        scored_patent_count,
        x_out_of_range: !(0.0..=1.0).contains(&x),
    })
}

/// `Q(t) = q0 * exp(k * (t - t0))`.
pub fn project_performance(q0: f64, k: f64, t0: f64, t: f64) -> Result<f64, RatesError> {
    if !(q0 > 0.0) {
        return Err(RatesError::NonPositivePerformance(q0));
    }
    Ok(q0 * (k * (t - t0)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub technology: String,
    pub observed_k: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: RegressionModel,
    pub fit: OlsFit,
}

/// OLS of ln(observed K) on X; sigma2 is the residual variance.
pub fn train(records: &[TrainingRecord]) -> Result<TrainedModel, RatesError> {
    if let Some(r) = records.iter().find(|r| !(r.observed_k > 0.0)) {
        return Err(RatesError::NonPositiveRate(r.observed_k));
    }
    let x: Vec<f64> = records.iter().map(|r| r.x).collect();
    let y: Vec<f64> = records.iter().map(|r| r.observed_k.ln()).collect();
    let fit = ols(&x, &y)?;
    Ok(TrainedModel {
        model: RegressionModel {
            slope: fit.slope,
            intercept: fit.intercept,
            sigma2: fit.sigma2.max(0.0),
            n_train: records.len(),
            provenance: format!("trained by OLS on {} records", records.len()),
        },
        fit,
    })
}

/// OLS of K on domain size.
pub fn size_regression(estimates: &[RateEstimate], sizes: &[usize]) -> Result<OlsFit, RatesError> {
    if estimates.len() != sizes.len() {
        return Err(RatesError::LengthMismatch(estimates.len(), sizes.len()));
    }
    let x: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let y: Vec<f64> = estimates.iter().map(|e| e.k).collect();
    ols(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { n, mean: 0.0, std: 0.0, min: 0.0, max: 0.0 };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Summary {
        n,
        mean,
        std,
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub domain_code: String,
    pub original_k: f64,
    pub dedup_k: f64,
    pub difference: f64,
    pub percent_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupSensitivity {
    pub rows: Vec<SensitivityRow>,
    pub original: Summary,
    pub dedup: Summary,
    pub difference: Summary,
    pub percent_difference: Summary,
}

/// Compares rates estimated on pre-dedup overlaps (O) with rates on the
/// deduplicated domains (D): O - D and 100 (O - D) / D per domain. Rows are
/// sorted by code.
pub fn dedup_sensitivity(original: &[RateEstimate], dedup: &[RateEstimate]) -> Result<DedupSensitivity, RatesError> {
    let o: BTreeMap<&str, f64> = original.iter().map(|e| (e.domain_code.as_str(), e.k)).collect();
    let d: BTreeMap<&str, f64> = dedup.iter().map(|e| (e.domain_code.as_str(), e.k)).collect();
    if o.len() != original.len() || d.len() != dedup.len() {
        return Err(RatesError::CodeMismatch("duplicate domain code".into()));
    }
    if let Some(code) = o.keys().find(|c| !d.contains_key(*c)).or_else(|| d.keys().find(|c| !o.contains_key(*c))) {
        return Err(RatesError::CodeMismatch((*code).to_string()));
    }
    let rows: Vec<SensitivityRow> = o
        .iter()
        .map(|(code, &ok)| {
            let dk = d[code];
            SensitivityRow {
                domain_code: code.to_string(),
                original_k: ok,
                dedup_k: dk,
                difference: ok - dk,
                percent_difference: 100.0 * (ok - dk) / dk,
            }
        })
        .collect();
    let col = |f: fn(&SensitivityRow) -> f64| summarize(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(DedupSensitivity {
        original: col(|r| r.original_k),
        dedup: col(|r| r.dedup_k),
        difference: col(|r| r.difference),
        percent_difference: col(|r| r.percent_difference),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_and_invert() {
        let m = RegressionModel::default();
        assert!((m.estimate_k(0.0).unwrap() - 0.006914).abs() < 1e-6);
        // exp(-1.8656115) to 10 digits.
        assert!((m.estimate_k(0.5).unwrap() - 0.1548015198).abs() < 1e-9);
        let s = m.clone().with_sigma2(0.09).unwrap();
        let ratio = s.estimate_k(0.3).unwrap() / m.estimate_k(0.3).unwrap();
        assert!((ratio - 1.04603).abs() < 1e-5);
        assert!((m.invert_k(2.288).unwrap() - 0.9332).abs() < 1e-4);
        assert!((m.invert_k(0.019).unwrap() - 0.1626).abs() < 1e-4);
        assert!(m.invert_k(0.0).is_err());
        assert!(m.estimate_k(f64::NAN).is_err());
        assert!(m.clone().with_sigma2(-1.0).is_err());
    }

    #[test]
    fn projection() {
        assert_eq!(project_performance(3.0, 0.4, 2000.0, 2000.0).unwrap(), 3.0);
        assert!((project_performance(1.0, 2f64.ln(), 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((project_performance(1.0, 0.426, 2010.0, 2015.0).unwrap() - 8.415).abs() < 0.01);
        assert!(project_performance(0.0, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn sensitivity_identity_and_mismatch() {
        let e = |c: &str, k: f64| RateEstimate {
            domain_code: c.into(),
            x: 0.5,
            k,
            scored_patent_count: 1,
            x_out_of_range: false,
        };
        let a = vec![e("1A", 0.1), e("2B", 0.3)];
        let r = dedup_sensitivity(&a, &a).unwrap();
        assert!(r.rows.iter().all(|x| x.difference == 0.0 && x.percent_difference == 0.0));
        let b = vec![e("1A", 0.1), e("3C", 0.3)];
        assert_eq!(dedup_sensitivity(&a, &b), Err(RatesError::CodeMismatch("2B".into())));
    }

    #[test]
    fn summary_uses_sample_std() {
        let s = summarize(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.min, s.max), (2.0, 9.0));
    }
}
