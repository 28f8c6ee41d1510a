//! Scalar fields over which a problem is posed.
//!
//! The hierarchical model is written for real data. For complex data the
//! circularly-symmetric complex Gaussian is used: transposes become conjugate
//! transposes, squares become squared moduli, and every `1/2` factor that
//! comes from the real Gaussian exponent becomes `1`.

use std::fmt;

use nalgebra::ComplexField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    /// Multiplier of `ln γ` and of `γ·|r|²` in a Gaussian log-density:
    /// `1/2` for real data, `1` for complex data.
    pub fn half_or_one(self) -> f64 {
        match self {
            ScalarField::Real => 0.5,
            ScalarField::Complex => 1.0,
        }
    }

    /// Normalizing constant per scalar observation of a unit-precision
    /// Gaussian: `ln(2π)/2` (real) or `ln π` (complex).
    pub fn log_norm_const(self) -> f64 {
        match self {
            ScalarField::Real => 0.5 * (2.0 * std::f64::consts::PI).ln(),
            ScalarField::Complex => std::f64::consts::PI.ln(),
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Real => f.write_str("real"),
            ScalarField::Complex => f.write_str("complex"),
        }
    }
}

impl std::str::FromStr for ScalarField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(ScalarField::Real),
            "complex" => Ok(ScalarField::Complex),
            other => Err(format!("unknown scalar field `{other}`")),
        }
    }
}

/// Element type of matrices and vectors: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + fmt::Debug + 'static {
    const FIELD: ScalarField;

    /// Builds a value from real and imaginary parts. Real scalars drop `im`.
    fn from_parts(re: f64, im: f64) -> Self;

    fn parts(self) -> (f64, f64);
}

impl Scalar for f64 {
    const FIELD: ScalarField = ScalarField::Real;

    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    #[inline]
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Scalar for Complex64 {
    const FIELD: ScalarField = ScalarField::Complex;

    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    #[inline]
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}
