//! Experiment configuration: plain-text `key=value` assignments with `#`
//! comments, mirrored one-to-one by `--key=value` command-line flags. Flags
//! override file values, which override the built-in defaults.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("{0}")]
    Constraint(String),
    #[error("missing output path: pass --out=FILE or set the `out` key")]
    MissingOutput,
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Which result table to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Estimation error of the three stopping schemes across prior variances.
    MseVsTau,
    /// Estimation error of the two fixed-budget schemes across k.
    MseVsK,
    /// Expected transmission counts: analytic, Monte Carlo, and bounds.
    EkVsTau,
    /// Closed-form vs quadrature table for the upper-bound branch integrals.
    Diagnostics,
}

impl ExperimentKind {
    pub fn parse(value: &str) -> Result<Self, ConfigError> {
        match value {
            "mse_vs_tau" => Ok(Self::MseVsTau),
            "mse_vs_k" => Ok(Self::MseVsK),
            "ek_vs_tau" => Ok(Self::EkVsTau),
            "diagnostics" => Ok(Self::Diagnostics),
            other => Err(invalid(
                "experiment",
                format!("`{other}` is not one of mse_vs_tau, mse_vs_k, ek_vs_tau, diagnostics"),
            )),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MseVsTau => "mse_vs_tau",
            Self::MseVsK => "mse_vs_k",
            Self::EkVsTau => "ek_vs_tau",
            Self::Diagnostics => "diagnostics",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub sensor_count: usize,
    pub prior_mean: f64,
    /// Prior-variance sweep; experiments that need a single prior use the
    /// first element.
    pub tau_sweep: Vec<f64>,
    pub band_lower: f64,
    pub band_upper: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Measurement budgets for the fixed-k experiment.
    pub k_sweep: Vec<usize>,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::EkVsTau,
            sensor_count: 50,
            prior_mean: 2.0,
            tau_sweep: sweep_range(0.5, 5.0, 0.5),
            band_lower: 0.2,
            band_upper: 1.0,
            alpha: 1.96,
            epsilon: 0.4,
            trials: 100_000,
            seed: 42,
            k_sweep: vec![1, 5, 10, 20, 30, 40, 50],
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses config text onto the defaults and applies flag overrides.
    pub fn from_sources(file_text: Option<&str>, flags: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(text) = file_text {
            for (key, value) in tokenize(text)? {
                cfg.apply(&key, &value)?;
            }
        }
        for (key, value) in flags {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a bare config text (no flags).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_sources(Some(text), &[])
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => self.kind = ExperimentKind::parse(value)?,
            "n" => self.sensor_count = parse_usize("n", value)?,
            "mu0" => self.prior_mean = parse_f64("mu0", value)?,
            "tau0_sq" => self.tau_sweep = parse_sweep("tau0_sq", value)?,
            "a" => self.band_lower = parse_f64("a", value)?,
            "b" => self.band_upper = parse_f64("b", value)?,
            "alpha" => self.alpha = parse_f64("alpha", value)?,
            "epsilon" => self.epsilon = parse_f64("epsilon", value)?,
            "trials" => self.trials = parse_usize("trials", value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|e| invalid("seed", e.to_string()))?
            }
            "k_sweep" => self.k_sweep = parse_usize_list("k_sweep", value)?,
            "out" => self.out = Some(value.to_string()),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sensor_count < 1 {
            return Err(ConfigError::Constraint("n must be >= 1".into()));
        }
        if !self.prior_mean.is_finite() {
            return Err(ConfigError::Constraint("mu0 must be finite".into()));
        }
        if self.tau_sweep.is_empty() {
            return Err(ConfigError::Constraint("tau0_sq sweep must be nonempty".into()));
        }
        if self.tau_sweep.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ConfigError::Constraint(
                "tau0_sq values must be finite and > 0".into(),
            ));
        }
        if !(self.band_lower.is_finite() && self.band_lower > 0.0) {
            return Err(ConfigError::Constraint("a must be finite and > 0".into()));
        }
        if !(self.band_upper.is_finite() && self.band_lower < self.band_upper) {
            return Err(ConfigError::Constraint("a must be < b".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(ConfigError::Constraint("alpha must be finite and > 0".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ConfigError::Constraint("epsilon must be finite and > 0".into()));
        }
        if self.trials < 1 {
            return Err(ConfigError::Constraint("trials must be >= 1".into()));
        }
        if self.kind == ExperimentKind::MseVsK {
            if self.k_sweep.is_empty() {
                return Err(ConfigError::Constraint("k_sweep must be nonempty".into()));
            }
            if let Some(k) = self.k_sweep.iter().find(|&&k| k > self.sensor_count) {
                return Err(ConfigError::Constraint(format!(
                    "k_sweep entry {k} exceeds n = {}",
                    self.sensor_count
                )));
            }
        }
        Ok(())
    }

    /// Serializes to config text; parsing the result reproduces the config.
    pub fn to_config_text(&self) -> String {
        let mut text = String::new();
        text.push_str(&format!("experiment={}\n", self.kind));
        text.push_str(&format!("n={}\n", self.sensor_count));
        text.push_str(&format!("mu0={}\n", self.prior_mean));
        text.push_str(&format!("tau0_sq={}\n", join_f64(&self.tau_sweep)));
        text.push_str(&format!("a={}\n", self.band_lower));
        text.push_str(&format!("b={}\n", self.band_upper));
        text.push_str(&format!("alpha={}\n", self.alpha));
        text.push_str(&format!("epsilon={}\n", self.epsilon));
        text.push_str(&format!("trials={}\n", self.trials));
        text.push_str(&format!("seed={}\n", self.seed));
        text.push_str(&format!(
            "k_sweep={}\n",
            self.k_sweep
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        if let Some(out) = &self.out {
            text.push_str(&format!("out={out}\n"));
        }
        text
    }
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Inclusive range with rounding slack so e.g. 0.5:5:0.5 yields ten points.
fn sweep_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|e| invalid(key, e.to_string()))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|e| invalid(key, e.to_string()))
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| invalid(key, format!("`{part}`: {e}")))
        })
        .collect()
}

/// A sweep is either `start:stop:step`, a comma list, or a single value.
fn parse_sweep(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(key, "range form is start:stop:step"));
        }
        let start = parse_f64(key, parts[0])?;
        let stop = parse_f64(key, parts[1])?;
        let step = parse_f64(key, parts[2])?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(key, "step must be > 0"));
        }
        if stop < start {
            return Err(invalid(key, "stop must be >= start"));
        }
        Ok(sweep_range(start, stop, step))
    } else {
        value
            .split(',')
            .map(|part| parse_f64(key, part.trim()))
            .collect()
    }
}

/// Splits config text into `key=value` assignments. `#` starts a comment;
/// whitespace separates assignments, so several may share a line.
fn tokenize(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            match token.split_once('=') {
                Some((key, value)) if !key.is_empty() => {
                    pairs.push((key.to_string(), value.to_string()));
                }
                _ => {
                    return Err(invalid(
                        token,
                        "expected key=value".to_string(),
                    ))
                }
            }
        }
    }
    Ok(pairs)
}

/// Parses command-line tokens into `(key, value)` pairs: `--key=value`, or
/// `--key value` consuming the next token.
pub fn parse_flag_tokens(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    let mut iter = args.iter().peekable();
    while let Some(arg) = iter.next() {
        let Some(stripped) = arg.strip_prefix("--") else {
            return Err(ConfigError::UnknownKey(arg.clone()));
        };
        if let Some((key, value)) = stripped.split_once('=') {
            pairs.push((key.to_string(), value.to_string()));
        } else if let Some(value) = iter.next() {
            pairs.push((stripped.to_string(), value.clone()));
        } else {
            return Err(invalid(stripped, "flag is missing a value"));
        }
    }
    Ok(pairs)
}
