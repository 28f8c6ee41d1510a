//! Synthetic experiment instances: a uniform-linear-array DOA dictionary with
//! unit-modulus sources, and a real Gaussian-matrix scenario for oracle tests.
//!
//! Every generator is a pure function of its configuration and a seed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, BcsError, Result};
use crate::field::{Scalar, ScalarField};
use crate::model::{GroundTruth, ProblemInstance};

/// The generator used for every random draw.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for trial `trial` of sweep point `point` under `master`.
///
/// Depends only on its arguments, so a sweep gives the same instances no
/// matter how trials are scheduled.
pub fn trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaConfig {
    /// Number of sensors.
    pub m: usize,
    /// Number of angular grid points.
    pub n: usize,
    /// Sensor spacing over wavelength, `D/λ`.
    pub spacing_ratio: f64,
}

impl DoaConfig {
    pub fn new(m: usize) -> Self {
        DoaConfig {
            m,
            n: 64,
            spacing_ratio: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(param("m", "must be at least 1"));
        }
        if self.n < 2 {
            return Err(param("n", "the angular grid needs at least 2 points"));
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio.is_finite()) {
            return Err(param("spacing_ratio", "must be > 0"));
        }
        Ok(())
    }

    /// `N` evenly spaced angles spanning `[−π/2, π/2]`, endpoints included.
    pub fn grid(&self) -> Vec<f64> {
        let step = PI / (self.n - 1) as f64;
        (0..self.n).map(|i| -PI / 2.0 + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionMode {
    /// The corrupted measurement is replaced by the draw.
    #[default]
    Replace,
    /// The draw is added to the measurement.
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    /// Number of corrupted measurements.
    pub t: usize,
    /// Range of each uniform draw (real and imaginary parts separately).
    pub amplitude_range: (f64, f64),
    pub mode: CorruptionMode,
}

impl CorruptionConfig {
    pub fn new(t: usize) -> Self {
        CorruptionConfig {
            t,
            amplitude_range: (-10.0, 10.0),
            mode: CorruptionMode::Replace,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.t > 0 && self.t >= m {
            return Err(param("t", format!("needs T < M, got T={} M={m}", self.t)));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(param("amplitude_range", "needs finite lo < hi"));
        }
        Ok(())
    }
}

/// `a_{m,n} = exp(−2jπ (m−1) sin(θ_n) D/λ)` with `m` counted from 1.
pub fn build_doa_dictionary(cfg: &DoaConfig) -> Result<DMatrix<Complex64>> {
    cfg.validate()?;
    let grid = cfg.grid();
    Ok(DMatrix::from_fn(cfg.m, cfg.n, |m, n| {
        let phase = -2.0 * PI * m as f64 * grid[n].sin() * cfg.spacing_ratio;
        Complex64::from_polar(1.0, phase)
    }))
}

/// `K` unit-modulus entries on a uniformly drawn support: `exp(jφ)` with
/// `φ ~ U[0, 2π)` for complex data, `±1` for real data.
pub fn sample_sparse_signal<T: Scalar>(
    n: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(DVector<T>, Vec<usize>)> {
    if k == 0 || k > n {
        return Err(BcsError::InvalidInstance(format!(
            "sparsity must satisfy 1 <= K <= N, got K={k} N={n}"
        )));
    }
    let mut support = sample(rng, n, k).into_vec();
    support.sort_unstable();
    let mut x = DVector::zeros(n);
    for &i in &support {
        x[i] = match T::FIELD {
            ScalarField::Complex => {
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                T::from_parts(phi.cos(), phi.sin())
            }
            ScalarField::Real => T::from_real(if rng.random::<bool>() { 1.0 } else { -1.0 }),
        };
    }
    Ok((x, support))
}

/// Writes `values` into `y` at `idx` (replace) or adds them (add).
pub fn corrupt_at<T: Scalar>(
    y: &DVector<T>,
    idx: &[usize],
    values: &[T],
    mode: CorruptionMode,
) -> DVector<T> {
    let mut out = y.clone();
    for (&m, &v) in idx.iter().zip(values) {
        out[m] = match mode {
            CorruptionMode::Replace => v,
            CorruptionMode::Add => out[m] + v,
        };
    }
    out
}

/// Corrupts `T` uniformly chosen measurements. Returns the observed vector,
/// the sorted outlier rows and the raw draws aligned with them.
pub fn corrupt<T: Scalar>(
    y_clean: &DVector<T>,
    cfg: &CorruptionConfig,
    rng: &mut impl Rng,
) -> Result<(DVector<T>, Vec<usize>, Vec<T>)> {
    cfg.validate(y_clean.len())?;
    if cfg.t == 0 {
        return Ok((y_clean.clone(), Vec::new(), Vec::new()));
    }
    let mut idx = sample(rng, y_clean.len(), cfg.t).into_vec();
    idx.sort_unstable();
    let (lo, hi) = cfg.amplitude_range;
    let values: Vec<T> = idx
        .iter()
        .map(|_| {
            let re = rng.random_range(lo..hi);
            match T::FIELD {
                ScalarField::Complex => T::from_parts(re, rng.random_range(lo..hi)),
                ScalarField::Real => T::from_real(re),
            }
        })
        .collect();
    let y = corrupt_at(y_clean, &idx, &values, cfg.mode);
    Ok((y, idx, values))
}

/// Adds white Gaussian noise of total variance `noise_var` per entry
/// (split evenly between real and imaginary parts for complex data).
pub fn add_noise<T: Scalar>(
    y: &DVector<T>,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<DVector<T>> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(param("noise_var", "must be finite and >= 0"));
    }
    if noise_var == 0.0 {
        return Ok(y.clone());
    }
    let mut out = y.clone();
    match T::FIELD {
        ScalarField::Real => {
            let sd = noise_var.sqrt();
            for v in out.iter_mut() {
                let w: f64 = rng.sample(StandardNormal);
                *v += T::from_real(sd * w);
            }
        }
        ScalarField::Complex => {
            let sd = (noise_var / 2.0).sqrt();
            for v in out.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += T::from_parts(sd * re, sd * im);
            }
        }
    }
    Ok(out)
}

fn assemble<T: Scalar>(
    a: DMatrix<T>,
    k: usize,
    corruption: &CorruptionConfig,
    noise_var: f64,
    rng: &mut SeededRng,
) -> Result<(ProblemInstance<T>, GroundTruth<T>)> {
    corruption.validate(a.nrows())?;
    let (x_true, support) = sample_sparse_signal::<T>(a.ncols(), k, rng)?;
    let clean_y = &a * &x_true;
    let noisy = add_noise(&clean_y, noise_var, rng)?;
    let (y, outlier_idx, e_vals) = corrupt(&noisy, corruption, rng)?;
    let truth = GroundTruth {
        x_true,
        support,
        outlier_idx,
        e_vals,
        noise_var,
        clean_y,
    };
    Ok((ProblemInstance::new(a, y)?, truth))
}

/// DOA instance: dictionary, `K` on-grid unit-circle sources, noise, then
/// corruption (so replaced outliers are the final observed values).
pub fn make_instance(
    doa: &DoaConfig,
    k: usize,
    corruption: &CorruptionConfig,
    noise_var: f64,
    seed: u64,
) -> Result<(ProblemInstance<Complex64>, GroundTruth<Complex64>)> {
    let a = build_doa_dictionary(doa)?;
    let mut rng = rng_from_seed(seed);
    assemble(a, k, corruption, noise_var, &mut rng)
}

/// Real instance with i.i.d. standard normal `A`, columns scaled to unit
/// norm, and `±1` nonzeros.
pub fn make_gaussian_instance(
    m: usize,
    n: usize,
    k: usize,
    corruption: &CorruptionConfig,
    noise_var: f64,
    seed: u64,
) -> Result<(ProblemInstance<f64>, GroundTruth<f64>)> {
    if m == 0 || n == 0 {
        return Err(BcsError::InvalidInstance("M and N must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    assemble(a, k, corruption, noise_var, &mut rng)
}
