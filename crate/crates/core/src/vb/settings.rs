use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Starting value of `⟨γ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaInit {
    /// `M / (0.1 ‖y‖²)`, or 1 when `y = 0`.
    Auto(AutoTag),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl GammaInit {
    pub const AUTO: GammaInit = GammaInit::Auto(AutoTag::Auto);

    pub fn resolve(self, m: usize, y_norm_sq: f64) -> f64 {
        match self {
            GammaInit::Auto(_) if y_norm_sq > 0.0 => m as f64 / (0.1 * y_norm_sq),
            GammaInit::Auto(_) => 1.0,
            GammaInit::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitPolicy {
    pub z0: f64,
    pub alpha0: f64,
    pub gamma0: GammaInit,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy {
            z0: 1.0,
            alpha0: 1.0,
            gamma0: GammaInit::AUTO,
        }
    }
}

/// Form of the indicator log-odds `L_m`, where `r_m` is the row residual
/// and `v_m = a_m Φ a_mᴴ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorRule {
    /// `⟨ln π⟩ − ⟨ln(1 − π)⟩ − ⟨γ⟩ (|r_m|² + v_m) / 2` for both fields.
    #[default]
    Standard,
    /// Adds the likelihood normaliser `s⟨ln γ⟩ − ln C` and uses the field
    /// factor `s` on the residual, which makes the step an exact coordinate
    /// ascent on the lower bound. It tends to reject every row when `⟨γ⟩`
    /// starts small.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VbSettings {
    pub max_iters: usize,
    /// Stop once `‖μ_new − μ_old‖ / ‖μ_new‖ ≤ tol`.
    pub tol: f64,
    /// First relative jitter tried when the covariance solve fails.
    pub jitter: f64,
    pub init: InitPolicy,
    /// Freeze coefficients whose `⟨α_n⟩` exceeds this value. Off by default.
    pub prune_threshold: Option<f64>,
    pub indicator_rule: IndicatorRule,
    /// Hold `⟨z⟩` at these values and skip the `z`/`π` updates.
    #[serde(skip)]
    pub fixed_z: Option<Vec<f64>>,
    /// Record the lower bound after every sweep.
    pub track_elbo: bool,
    /// Record a [`TraceRecord`](super::TraceRecord) after every sweep.
    pub trace: bool,
}

impl Default for VbSettings {
    fn default() -> Self {
        VbSettings {
            max_iters: 500,
            tol: 1e-8,
            jitter: 1e-12,
            init: InitPolicy::default(),
            prune_threshold: None,
            indicator_rule: IndicatorRule::Standard,
            fixed_z: None,
            track_elbo: false,
            trace: false,
        }
    }
}

impl VbSettings {
    /// Default settings with pruning at `α_max = 1e12`.
    pub fn with_pruning() -> Self {
        VbSettings {
            prune_threshold: Some(1e12),
            ..VbSettings::default()
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(param("max_iters", "must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(param("tol", format!("must be > 0, got {}", self.tol)));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(param("jitter", format!("must be >= 0, got {}", self.jitter)));
        }
        if !(0.0..=1.0).contains(&self.init.z0) {
            return Err(param("z0", format!("must lie in [0, 1], got {}", self.init.z0)));
        }
        if !(self.init.alpha0 > 0.0 && self.init.alpha0.is_finite()) {
            return Err(param("alpha0", "must be > 0"));
        }
        if let GammaInit::Value(g) = self.init.gamma0 {
            if !(g > 0.0 && g.is_finite()) {
                return Err(param("gamma0", "must be > 0 or \"auto\""));
            }
        }
        if let Some(t) = self.prune_threshold {
            if t.is_nan() || t <= 0.0 {
                return Err(param("prune_threshold", "must be > 0"));
            }
        }
        if let Some(z) = &self.fixed_z {
            if z.len() != m {
                return Err(param(
                    "fixed_z",
                    format!("has {} entries, expected {m}", z.len()),
                ));
            }
            if !z.iter().all(|v| (0.0..=1.0).contains(v)) {
                return Err(param("fixed_z", "entries must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = VbSettings::default();
        assert_eq!(s.max_iters, 500);
        assert_eq!(s.tol, 1e-8);
        assert_eq!(s.jitter, 1e-12);
        assert_eq!(s.init.z0, 1.0);
        assert_eq!(s.init.gamma0, GammaInit::AUTO);
        assert!(s.prune_threshold.is_none());
        s.validate(3).unwrap();
    }

    #[test]
    fn gamma_init_resolution() {
        assert_eq!(GammaInit::AUTO.resolve(10, 4.0), 25.0);
        assert_eq!(GammaInit::AUTO.resolve(10, 0.0), 1.0);
        assert_eq!(GammaInit::Value(3.0).resolve(10, 4.0), 3.0);
    }

    #[test]
    fn gamma_init_serde() {
        let p: InitPolicy =
            toml::from_str("z0 = 1.0\nalpha0 = 1.0\ngamma0 = \"auto\"").unwrap();
        assert_eq!(p.gamma0, GammaInit::AUTO);
        let p: InitPolicy = toml::from_str("z0 = 1.0\nalpha0 = 1.0\ngamma0 = 2.5").unwrap();
        assert_eq!(p.gamma0, GammaInit::Value(2.5));
    }

    #[test]
    fn rejects_bad_values() {
        let s = VbSettings {
            max_iters: 0,
            ..Default::default()
        };
        assert!(s.validate(1).is_err());
        let s = VbSettings {
            fixed_z: Some(vec![1.0; 2]),
            ..Default::default()
        };
        assert!(s.validate(3).is_err());
        let mut s = VbSettings::default();
        s.init.z0 = 1.5;
        assert!(s.validate(3).is_err());
    }
}
