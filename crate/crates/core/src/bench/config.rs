use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::Method;
use crate::model::HyperParams;
use crate::scenario::CorruptionMode;
use crate::vb::VbSettings;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Complex steering dictionary over an angular grid.
    Doa,
    /// Real i.i.d. Gaussian matrix with unit-norm columns.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    M,
    T,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::M => "m",
            SweepAxis::T => "t",
        }
    }
}

fn default_n() -> usize {
    64
}
fn default_spacing() -> f64 {
    0.5
}
fn default_threshold() -> f64 {
    1e-6
}
fn default_amplitude() -> (f64, f64) {
    (-10.0, 10.0)
}
fn default_methods() -> Vec<Method> {
    vec![Method::BpRbcs, Method::CRbcs, Method::Ideal]
}

/// One experiment grid. Read from TOML; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    #[serde(default = "default_n")]
    pub n: usize,
    pub k: usize,
    /// Sensor count; ignored when sweeping over `m`.
    #[serde(default)]
    pub m: usize,
    /// Outlier count; ignored when sweeping over `t`.
    #[serde(default)]
    pub t: usize,
    #[serde(default)]
    pub noise_var: f64,
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default = "default_spacing")]
    pub spacing_ratio: f64,
    #[serde(default)]
    pub corruption_mode: CorruptionMode,
    #[serde(default = "default_amplitude")]
    pub amplitude: (f64, f64),
    #[serde(default)]
    pub hyper: HyperParams,
    #[serde(default)]
    pub solver: VbSettings,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SweepConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    /// `(m, t)` at one sweep point.
    pub fn point(&self, axis_value: usize) -> (usize, usize) {
        match self.axis {
            SweepAxis::M => (axis_value, self.t),
            SweepAxis::T => (self.m, axis_value),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            return Err(invalid("values", "must list at least one axis value"));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("values", "must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "must name at least one method"));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(invalid("methods", "lists a method twice"));
        }
        if self.n < 2 {
            return Err(invalid("n", "must be at least 2"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(invalid("k", format!("must satisfy 1 <= k <= n ({})", self.n)));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(invalid("noise_var", "must be finite and >= 0"));
        }
        if self.success_threshold.is_nan() || self.success_threshold < 0.0 {
            return Err(invalid("success_threshold", "must be >= 0"));
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio.is_finite()) {
            return Err(invalid("spacing_ratio", "must be > 0"));
        }
        let (lo, hi) = self.amplitude;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("amplitude", "needs finite lo < hi"));
        }
        if self.axis == SweepAxis::T && self.m == 0 {
            return Err(invalid("m", "is required when sweeping over t"));
        }
        for &v in &self.values {
            let (m, t) = self.point(v);
            let field = if self.axis == SweepAxis::M { "values" } else { "m" };
            if m == 0 {
                return Err(invalid(field, "sensor count must be >= 1"));
            }
            if t > 0 && t >= m {
                return Err(invalid(
                    if self.axis == SweepAxis::T { "values" } else { "t" },
                    format!("needs t < m, got t={t} m={m}"),
                ));
            }
        }
        self.hyper.validate().map_err(|e| match e {
            crate::BcsError::InvalidParameter { name, reason } => {
                invalid(&format!("hyper.{name}"), reason)
            }
            other => invalid("hyper", other.to_string()),
        })?;
        self.solver.validate(1).map_err(|e| match e {
            crate::BcsError::InvalidParameter { name, reason } => {
                invalid(&format!("solver.{name}"), reason)
            }
            other => invalid("solver", other.to_string()),
        })?;
        Ok(())
    }
}
