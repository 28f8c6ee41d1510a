//! Thin wrappers over the special functions the updates need.

use crate::error::{BcsError, Result};

/// Digamma `Ψ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 || !x.is_finite() {
        return Err(BcsError::Domain(x));
    }
    Ok(statrs::function::gamma::digamma(x))
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `1 / (1 + e^{-l})` without overflow for either sign of `l`.
pub fn logistic(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Entropy of a Bernoulli(p) variable, with `0 ln 0 = 0`.
pub fn bernoulli_entropy(p: f64) -> f64 {
    let t = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    t(p) + t(1.0 - p)
}
