//! Maximum-likelihood fits of the log-normal, exponentially modified
//! Gaussian and normal families, scored by histogram SSE, AIC and BIC.
//!
//! Parameterizations follow the common three-parameter forms:
//! log-normal `X = loc + scale * exp(shape * Z)`; EMG
//! `X = loc + scale * (Z + k * E)` with `E ~ Exp(1)`, so the exponential
//! component has rate `1 / (k * scale)`; normal `X = mean + std * Z`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::optimize::{golden_section, nelder_mead};
use super::RatesError;

pub const MIN_FIT_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lognormal,
    Emg,
    Normal,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Lognormal, Family::Emg, Family::Normal];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Lognormal => "lognormal",
            Family::Emg => "emg",
            Family::Normal => "normal",
        }
    }

    pub fn parameter_count(self) -> usize {
        match self {
            Family::Lognormal | Family::Emg => 3,
            Family::Normal => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FitParams {
    Lognormal { shape: f64, loc: f64, scale: f64 },
    Emg { k: f64, loc: f64, scale: f64 },
    Normal { mean: f64, std: f64 },
}

impl FitParams {
    pub fn family(&self) -> Family {
        match self {
            FitParams::Lognormal { .. } => Family::Lognormal,
            FitParams::Emg { .. } => Family::Emg,
            FitParams::Normal { .. } => Family::Normal,
        }
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        match *self {
            FitParams::Lognormal { shape, loc, scale } => lognormal_logpdf(x, shape, loc, scale),
            FitParams::Emg { k, loc, scale } => emg_logpdf(x, k, loc, scale),
            FitParams::Normal { mean, std } => normal_logpdf(x, mean, std),
        }
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.logpdf(x)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FitParams,
    pub n: usize,
    pub log_likelihood: f64,
    pub sse: f64,
    pub aic: f64,
    pub bic: f64,
    pub bins: usize,
    pub iterations: usize,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_logpdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - LN_SQRT_2PI
}

pub fn lognormal_logpdf(x: f64, shape: f64, loc: f64, scale: f64) -> f64 {
    if x <= loc {
        return f64::NEG_INFINITY;
    }
    let y = (x - loc) / scale;
    let l = y.ln();
    -0.5 * (l / shape).powi(2) - (shape * y * scale).ln() - LN_SQRT_2PI
}

/// `ln(erfc(t))`, accurate far into the upper tail.
pub fn log_erfc(t: f64) -> f64 {
    if t < 20.0 {
        return erfc(t).ln();
    }
    let u = 1.0 / (t * t);
    let series = 1.0 - u / 2.0 + 3.0 * u * u / 4.0 - 15.0 * u.powi(3) / 8.0 + 105.0 * u.powi(4) / 16.0;
    -t * t - (t * PI.sqrt()).ln() + series.ln()
}

pub fn emg_logpdf(x: f64, k: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    -(2.0 * k).ln() - scale.ln() + 0.5 / (k * k) - z / k + log_erfc((1.0 / k - z) / SQRT_2)
}

/// Sum of squared differences between the fitted density at bin centers
/// and a histogram density with `ceil(sqrt(n))` equal-width bins.
pub fn histogram_sse(samples: &[f64], params: &FitParams) -> (f64, usize) {
    let n = samples.len();
    let bins = (n as f64).sqrt().ceil().max(1.0) as usize;
    let (lo, hi) = min_max(samples);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let sse = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let density = c as f64 / (n as f64 * width);
            let center = lo + (b as f64 + 0.5) * width;
            (params.logpdf(center).exp() - density).powi(2)
        })
        .sum();
    (sse, bins)
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn check_samples(samples: &[f64]) -> Result<(), RatesError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(RatesError::TooFewPoints {
            need: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(RatesError::NonFinite);
    }
    let (lo, hi) = min_max(samples);
    if lo == hi {
        return Err(RatesError::ZeroVariance);
    }
    Ok(())
}

fn finish(samples: &[f64], params: FitParams, iterations: usize) -> FitResult {
    let n = samples.len();
    let ll = params.log_likelihood(samples);
    let k = params.family().parameter_count() as f64;
    let (sse, bins) = histogram_sse(samples, &params);
    FitResult {
        params,
        n,
        log_likelihood: ll,
        sse,
        aic: 2.0 * k - 2.0 * ll,
        bic: k * (n as f64).ln() - 2.0 * ll,
        bins,
        iterations,
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
}

pub fn fit_normal(samples: &[f64]) -> Result<FitResult, RatesError> {
    check_samples(samples)?;
    let (mean, var) = mean_var(samples);
    Ok(finish(samples, FitParams::Normal { mean, std: var.sqrt() }, 0))
}

/// Closed-form shape and scale for a fixed location, with the profile
/// log-likelihood.
fn lognormal_given_loc(samples: &[f64], loc: f64) -> (f64, f64, f64) {
    let logs: Vec<f64> = samples.iter().map(|&x| (x - loc).ln()).collect();
    let (mu, var) = mean_var(&logs);
    let n = samples.len() as f64;
    let shape = var.sqrt();
    let ll = -logs.iter().sum::<f64>() - n * shape.ln() - n * LN_SQRT_2PI - n / 2.0;
    (shape, mu.exp(), ll)
}

/// Location profiled over offsets `range * 10^g` below the sample minimum,
/// `g` on a grid in [-8, 2], then refined by golden-section search in `g`.
///
/// The three-parameter log-normal likelihood is unbounded as the location
/// approaches the minimum; the grid keeps the search at least `1e-8 * range`
/// away, where an interior maximum dominates for realistic sample sizes.
pub fn fit_lognormal(samples: &[f64]) -> Result<FitResult, RatesError> {
    check_samples(samples)?;
    let (lo, hi) = min_max(samples);
    let range = hi - lo;
    let loc_at = |g: f64| lo - range * 10f64.powf(g);
    let profile = |g: f64| {
        let (shape, _, ll) = lognormal_given_loc(samples, loc_at(g));
        if shape > 0.0 && ll.is_finite() { -ll } else { f64::INFINITY }
    };
    let grid: Vec<f64> = (0..=40).map(|i| -8.0 + 0.25 * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&g| profile(g)).collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("grid is non-empty");
    if !values[best].is_finite() {
        return Err(RatesError::FitFailed {
            family: Family::Lognormal,
            reason: "profile likelihood is not finite on the location grid".into(),
        });
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (g, _) = golden_section(profile, a, b, 1e-10, 200);
    let loc = loc_at(g);
    let (shape, scale, _) = lognormal_given_loc(samples, loc);
    Ok(finish(samples, FitParams::Lognormal { shape, loc, scale }, grid.len()))
}

/// Joint Nelder-Mead over `(ln k, loc, ln scale)` from several
/// moment-based starting points, polished by restarts until stable.
pub fn fit_emg(samples: &[f64]) -> Result<FitResult, RatesError> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let (m, var) = mean_var(samples);
    let sd = var.sqrt();
    let m3 = samples.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let skew = m3 / var.powf(1.5);

    let nll = |p: &[f64]| {
        let (k, loc, scale) = (p[0].exp(), p[1], p[2].exp());
        -samples.iter().map(|&x| emg_logpdf(x, k, loc, scale)).sum::<f64>()
    };

    // Exponential share of the standard deviation: the moment estimate
    // (skew = 2 tau^3 / sd^3) plus fixed fractions to cover weak skew.
    let moment = (skew.max(0.0) / 2.0).cbrt().clamp(0.05, 0.95);
    let mut starts = Vec::new();
    for frac in [moment, 0.3, 0.6, 0.9] {
        let tau = frac * sd;
        let sigma = (var - tau * tau).max(1e-4 * var).sqrt();
        starts.push(vec![(tau / sigma).ln(), m - tau, sigma.ln()]);
    }
    let step = [0.5, 0.25 * sd, 0.3];
    let mut best = starts
        .iter()
        .map(|s| nelder_mead(nll, s, &step, 1e-10, 20_000))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("starts are non-empty");
    let mut iterations = best.iterations;
    for _ in 0..10 {
        let again = nelder_mead(nll, &best.x, &step, 1e-10, 20_000);
        iterations += again.iterations;
        let improved = again.value < best.value - 1e-9 * (1.0 + best.value.abs());
        best = if again.value <= best.value { again } else { best };
        if !improved && best.converged {
            break;
        }
    }
    if !best.converged || !best.value.is_finite() {
        return Err(RatesError::FitFailed {
            family: Family::Emg,
            reason: format!(
                "Nelder-Mead did not converge after {iterations} iterations (neg. log-likelihood {})",
                best.value
            ),
        });
    }
    let params = FitParams::Emg {
        k: best.x[0].exp(),
        loc: best.x[1],
        scale: best.x[2].exp(),
    };
    Ok(finish(samples, params, iterations))
}

pub fn fit_distribution(samples: &[f64], family: Family) -> Result<FitResult, RatesError> {
    match family {
        Family::Lognormal => fit_lognormal(samples),
        Family::Emg => fit_emg(samples),
        Family::Normal => fit_normal(samples),
    }
}
