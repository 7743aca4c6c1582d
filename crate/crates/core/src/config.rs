//! Pipeline configuration: flat `key = value` text with `TECHRATES_<KEY>`
//! environment overrides.
//!
//! Keys (all optional):
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `preset` | `desk` | `desk` (R = 100) or `paper` (R = 1000) |
//! | `input_dir` | `data/synthetic` | corpus TSV directory |
//! | `output_dir` | `artifacts` | artifact directory |
//! | `window_start`, `window_end` | `1976-01-01`, `2015-06-01` | inclusive grant-date window |
//! | `excluded_classes` | `G9B` | comma-separated labels removed from both systems |
//! | `error_budget` | `0.001` | tolerated fraction of malformed input rows |
//! | `min_size` | `100` | smallest valid domain |
//! | `horizon_years` | `3` | citation horizon after a cohort's grant year |
//! | `replicates` | preset | null-model replicates R |
//! | `swap_factor` | `10` | swap attempts per arc in a bucket |
//! | `epsilon` | `1e-9` | floor on the null standard deviation |
//! | `slope`, `intercept`, `sigma2`, `n_train` | published model | rate model |
//! | `seed` | `0` | master seed |
//! | `sample_seed` | `0` | seed of the random patent samples |
//! | `workers` | `0` | worker threads, 0 for all cores |
//!
//! Blank lines and lines starting with `#` are ignored. Environment
//! variables override the file, e.g. `TECHRATES_REPLICATES=20`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::artifacts::sha256_hex;
use crate::corpus::{FilterConfig, LoadOptions};
use crate::nullmodel::NullConfig;
use crate::rates::{RegressionModel, PUBLISHED_INTERCEPT, PUBLISHED_N_TRAIN, PUBLISHED_SLOPE};

pub const ENV_PREFIX: &str = "TECHRATES_";
pub const DESK_REPLICATES: usize = 100;
pub const PAPER_REPLICATES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {value:?} ({reason})")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }

    pub fn replicates(self) -> usize {
        match self {
            Preset::Desk => DESK_REPLICATES,
            Preset::Paper => PAPER_REPLICATES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub excluded_classes: Vec<String>,
    pub error_budget: f64,
    pub min_size: usize,
    pub horizon_years: i32,
    pub replicates: usize,
    pub swap_factor: f64,
    pub epsilon: f64,
    pub slope: f64,
    pub intercept: f64,
    pub sigma2: f64,
    pub n_train: usize,
    pub seed: u64,
    pub sample_seed: u64,
    pub workers: usize,
}

pub const KEYS: [&str; 19] = [
    "preset",
    "input_dir",
    "output_dir",
    "window_start",
    "window_end",
    "excluded_classes",
    "error_budget",
    "min_size",
    "horizon_years",
    "replicates",
    "swap_factor",
    "epsilon",
    "slope",
    "intercept",
    "sigma2",
    "n_train",
    "seed",
    "sample_seed",
    "workers",
];

impl Default for PipelineConfig {
    fn default() -> Self {
        let filter = FilterConfig::default();
        PipelineConfig {
            preset: Preset::Desk,
            input_dir: PathBuf::from("data/synthetic"),
            output_dir: PathBuf::from("artifacts"),
            window_start: filter.window_start,
            window_end: filter.window_end,
            excluded_classes: filter.excluded_classes,
            error_budget: LoadOptions::default().error_budget,
            min_size: 100,
            horizon_years: 3,
            replicates: DESK_REPLICATES,
            swap_factor: 10.0,
            epsilon: 1e-9,
            slope: PUBLISHED_SLOPE,
            intercept: PUBLISHED_INTERCEPT,
            sigma2: 0.0,
            n_train: PUBLISHED_N_TRAIN,
            seed: 0,
            sample_seed: 0,
            workers: 0,
        }
    }
}

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

/// Parses `key = value` lines into a map; later lines win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        };
        let key = k.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl PipelineConfig {
    /// Defaults, then `pairs`, then validation. `preset` is applied first so
    /// an explicit `replicates` wins over it.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut c = PipelineConfig::default();
        if let Some(p) = pairs.get("preset") {
            c.preset = match p.as_str() {
                "desk" => Preset::Desk,
                "paper" => Preset::Paper,
                _ => return Err(bad("preset", p, "expected desk or paper")),
            };
            c.replicates = c.preset.replicates();
        }
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "preset" => {}
                "input_dir" => c.input_dir = PathBuf::from(v),
                "output_dir" => c.output_dir = PathBuf::from(v),
                "window_start" => c.window_start = num(key, v)?,
                "window_end" => c.window_end = num(key, v)?,
                "excluded_classes" => {
                    c.excluded_classes = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
                }
                "error_budget" => c.error_budget = num(key, v)?,
                "min_size" => c.min_size = num(key, v)?,
                "horizon_years" => c.horizon_years = num(key, v)?,
                "replicates" => c.replicates = num(key, v)?,
                "swap_factor" => c.swap_factor = num(key, v)?,
                "epsilon" => c.epsilon = num(key, v)?,
                "slope" => c.slope = num(key, v)?,
                "intercept" => c.intercept = num(key, v)?,
                "sigma2" => c.sigma2 = num(key, v)?,
                "n_train" => c.n_train = num(key, v)?,
                "seed" => c.seed = num(key, v)?,
                "sample_seed" => c.sample_seed = num(key, v)?,
                "workers" => c.workers = num(key, v)?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Reads `path` (if given) and applies environment overrides from `env`.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                    path: p.display().to_string(),
                    reason: e.to_string(),
                })?;
                parse_pairs(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in env {
            let Some(key) = k.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(format!("{ENV_PREFIX}{}", key.to_ascii_uppercase())));
            }
            pairs.insert(key, v);
        }
        Self::from_pairs(&pairs)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.window_start > self.window_end {
            return fail("window_start is after window_end");
        }
        if !(0.0..1.0).contains(&self.error_budget) {
            return fail("error_budget must be in [0, 1)");
        }
        if self.min_size == 0 {
            return fail("min_size must be positive");
        }
        if self.horizon_years <= 0 {
            return fail("horizon_years must be positive");
        }
        if self.replicates < 2 {
            return fail("replicates must be at least 2");
        }
        if !(self.swap_factor > 0.0 && self.swap_factor.is_finite()) {
            return fail("swap_factor must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail("epsilon must be positive");
        }
        if !(self.slope.is_finite() && self.intercept.is_finite()) {
            return fail("model coefficients must be finite");
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return fail("sigma2 must be finite and non-negative");
        }
        Ok(())
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            window_start: self.window_start,
            window_end: self.window_end,
            excluded_classes: self.excluded_classes.clone(),
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            error_budget: self.error_budget,
            flag_labels: self.excluded_classes.clone(),
        }
    }

    pub fn null(&self) -> NullConfig {
        NullConfig {
            replicates: self.replicates,
            swap_factor: self.swap_factor,
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }

    pub fn model(&self) -> RegressionModel {
        let default = RegressionModel::default();
        let published = self.slope == default.slope && self.intercept == default.intercept;
        RegressionModel {
            slope: self.slope,
            intercept: self.intercept,
            sigma2: self.sigma2,
            n_train: self.n_train,
            provenance: if published {
                default.provenance
            } else {
                "coefficients supplied by configuration".to_string()
            },
        }
    }

    /// Canonical `key=value` listing of every setting that affects artifact
    /// contents (paths and worker count excluded).
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        put("window_start", self.window_start.to_string());
        put("window_end", self.window_end.to_string());
        put("excluded_classes", self.excluded_classes.join(","));
        put("error_budget", self.error_budget.to_string());
        put("min_size", self.min_size.to_string());
        put("horizon_years", self.horizon_years.to_string());
        put("replicates", self.replicates.to_string());
        put("swap_factor", self.swap_factor.to_string());
        put("epsilon", self.epsilon.to_string());
        put("slope", self.slope.to_string());
        put("intercept", self.intercept.to_string());
        put("sigma2", self.sigma2.to_string());
        put("n_train", self.n_train.to_string());
        put("seed", self.seed.to_string());
        put("sample_seed", self.sample_seed.to_string());
        s
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}
