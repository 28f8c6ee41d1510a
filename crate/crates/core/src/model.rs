//! Data types of the hierarchical model shared by every solver.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, BcsError, Result};
use crate::field::{Scalar, ScalarField};
use crate::linalg;

/// Prior parameters: `Gamma(a, b)` on each coefficient precision,
/// `Gamma(c, d)` on the noise precision and `Beta(e, f)` on each
/// inlier probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            a: 1e-10,
            b: 1e-10,
            c: 1e-10,
            d: 1e-10,
            e: 0.7,
            f: 0.3,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
            ("e", self.e),
            ("f", self.f),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Sensing matrix `A` (M×N) and observations `y` (length M).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T: Scalar> {
    a: DMatrix<T>,
    y: DVector<T>,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(a: DMatrix<T>, y: DVector<T>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(BcsError::InvalidInstance(format!(
                "sensing matrix must be non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() != y.len() {
            return Err(BcsError::InvalidInstance(format!(
                "sensing matrix has {} rows but y has {} entries",
                a.nrows(),
                y.len()
            )));
        }
        if !all_finite(a.iter()) || !all_finite(y.iter()) {
            return Err(BcsError::InvalidInstance(
                "non-finite entry in A or y".into(),
            ));
        }
        Ok(ProblemInstance { a, y })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    /// Number of measurements.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Number of unknown coefficients.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn field(&self) -> ScalarField {
        T::FIELD
    }

    /// Copy of the instance with the listed rows removed.
    pub fn without_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut drop = vec![false; self.m()];
        for &r in rows {
            if r >= self.m() {
                return Err(BcsError::InvalidInstance(format!(
                    "row index {r} out of range for M={}",
                    self.m()
                )));
            }
            drop[r] = true;
        }
        let keep: Vec<usize> = (0..self.m()).filter(|&r| !drop[r]).collect();
        if keep.is_empty() {
            return Err(BcsError::InvalidInstance(
                "deleting the listed rows leaves an empty system".into(),
            ));
        }
        let a = self.a.select_rows(keep.iter());
        let y = self.y.select_rows(keep.iter());
        ProblemInstance::new(a, y)
    }
}

fn all_finite<'a, T: Scalar>(mut it: impl Iterator<Item = &'a T>) -> bool {
    it.all(|v| {
        let (re, im) = v.parts();
        re.is_finite() && im.is_finite()
    })
}

/// Planted quantities behind a synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T: Scalar> {
    pub x_true: DVector<T>,
    /// Sorted signal support.
    pub support: Vec<usize>,
    /// Sorted indices of corrupted measurements.
    pub outlier_idx: Vec<usize>,
    /// Outlier values, aligned with `outlier_idx`.
    pub e_vals: Vec<T>,
    pub noise_var: f64,
    /// `A · x_true`.
    pub clean_y: DVector<T>,
}

impl<T: Scalar> GroundTruth<T> {
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn outlier_count(&self) -> usize {
        self.outlier_idx.len()
    }

    /// Checks the counting invariants against an instance of size M×N.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.x_true.len() != n || self.clean_y.len() != m {
            return Err(BcsError::InvalidInstance("ground truth dimensions".into()));
        }
        let nonzero = self.x_true.iter().filter(|v| v.modulus() != 0.0).count();
        let off_support = (0..n)
            .filter(|i| self.support.binary_search(i).is_err())
            .any(|i| self.x_true[i].modulus() != 0.0);
        if off_support || nonzero > self.support.len() {
            return Err(BcsError::InvalidInstance(
                "x_true is non-zero outside its support".into(),
            ));
        }
        if self.outlier_idx.len() >= m && m > 0 && !self.outlier_idx.is_empty() {
            return Err(BcsError::InvalidInstance(format!(
                "{} outliers out of {m} measurements",
                self.outlier_idx.len()
            )));
        }
        if self.outlier_idx.iter().any(|&i| i >= m) || self.support.iter().any(|&i| i >= n) {
            return Err(BcsError::InvalidInstance("index out of range".into()));
        }
        if self.e_vals.len() != self.outlier_idx.len() {
            return Err(BcsError::InvalidInstance(
                "e_vals and outlier_idx lengths differ".into(),
            ));
        }
        Ok(())
    }
}

/// Factorized variational posterior, stored by its natural parameters.
///
/// * `q(x)   = N(mu_x, phi_x)`
/// * `q(α_n) = Gamma(alpha_shape, alpha_rate[n])`
/// * `q(γ)   = Gamma(gamma_shape, gamma_rate)`
/// * `q(z_m) = Bernoulli(z_prob[m])`
/// * `q(π_m) = Beta(pi_a[m], pi_b[m])`
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState<T: Scalar> {
    pub mu_x: DVector<T>,
    pub phi_x: DMatrix<T>,
    pub alpha_shape: f64,
    pub alpha_rate: DVector<f64>,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
    pub z_prob: DVector<f64>,
    pub pi_a: DVector<f64>,
    pub pi_b: DVector<f64>,
}

/// Expectations consumed by the updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean_alpha: DVector<f64>,
    pub mean_gamma: f64,
    pub second_moment_x: DVector<f64>,
    pub z_mean: DVector<f64>,
}

impl<T: Scalar> PosteriorState<T> {
    pub fn n(&self) -> usize {
        self.mu_x.len()
    }

    pub fn m(&self) -> usize {
        self.z_prob.len()
    }

    pub fn mean_gamma(&self) -> f64 {
        self.gamma_shape / self.gamma_rate
    }

    /// `⟨ln γ⟩ = Ψ(c̃) − ln d̃`.
    pub fn mean_ln_gamma(&self) -> Result<f64> {
        Ok(crate::special::digamma(self.gamma_shape)? - self.gamma_rate.ln())
    }

    /// `⟨α_n⟩ = ã / b̃_n`, `⟨γ⟩ = c̃ / d̃`, `⟨|x_n|²⟩ = |μ_n|² + Φ_nn`.
    pub fn moments(&self) -> Result<Moments> {
        let mean_alpha = self.alpha_rate.map(|r| self.alpha_shape / r);
        let mean_gamma = self.mean_gamma();
        let second_moment_x = DVector::from_fn(self.n(), |i, _| {
            self.mu_x[i].modulus_squared() + self.phi_x[(i, i)].real()
        });
        let finite = mean_alpha.iter().all(|v| v.is_finite())
            && mean_gamma.is_finite()
            && second_moment_x.iter().all(|v| v.is_finite());
        if !finite {
            return Err(BcsError::Numerical("non-finite posterior moment".into()));
        }
        Ok(Moments {
            mean_alpha,
            mean_gamma,
            second_moment_x,
            z_mean: self.z_prob.clone(),
        })
    }

    /// Verifies the structural invariants of the posterior.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        if self.phi_x.nrows() != n || self.phi_x.ncols() != n {
            return Err(BcsError::Numerical("covariance has wrong shape".into()));
        }
        let mut max_abs = 0.0f64;
        let mut max_asym = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let v = self.phi_x[(i, j)];
                max_abs = max_abs.max(v.modulus());
                max_asym = max_asym.max((v - self.phi_x[(j, i)].conjugate()).modulus());
            }
            if self.phi_x[(j, j)].imaginary().abs() > 1e-12 * self.phi_x[(j, j)].modulus().max(1.0)
            {
                return Err(BcsError::Numerical(format!(
                    "covariance diagonal entry {j} is not real"
                )));
            }
        }
        if max_asym > 1e-10 * max_abs {
            return Err(BcsError::Numerical(format!(
                "covariance is not Hermitian (deviation {max_asym:e})"
            )));
        }
        if !linalg::is_positive_definite(&self.phi_x) {
            return Err(BcsError::Numerical(
                "covariance is not positive definite".into(),
            ));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha_shape)
            || !self.alpha_rate.iter().all(|&v| positive(v))
            || !positive(self.gamma_shape)
            || !positive(self.gamma_rate)
            || !self.pi_a.iter().all(|&v| positive(v))
            || !self.pi_b.iter().all(|&v| positive(v))
        {
            return Err(BcsError::Numerical(
                "Gamma/Beta parameters must be positive".into(),
            ));
        }
        if !self.z_prob.iter().all(|&p| (0.0..=1.0).contains(&p)) {
            return Err(BcsError::Numerical("z_prob outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// `diag(v)` as an operator, never materialized as a dense matrix.
#[derive(Debug, Clone, Copy)]
pub struct DiagOperator<'a> {
    diag: &'a [f64],
}

impl<'a> DiagOperator<'a> {
    pub fn new(diag: &'a [f64]) -> Self {
        DiagOperator { diag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `diag(v) · u`
    pub fn apply<T: Scalar>(&self, u: &DVector<T>) -> DVector<T> {
        assert_eq!(u.len(), self.diag.len(), "diag operator length mismatch");
        DVector::from_fn(u.len(), |i, _| u[i].scale(self.diag[i]))
    }

    /// `diag(v) · B` (scales rows).
    pub fn left_mul<T: Scalar>(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.nrows(), self.diag.len(), "diag operator length mismatch");
        DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].scale(self.diag[i]))
    }

    /// `B · diag(v)` (scales columns).
    pub fn right_mul<T: Scalar>(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.ncols(), self.diag.len(), "diag operator length mismatch");
        DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].scale(self.diag[j]))
    }

    /// `Bᴴ · diag(v) · B` for a non-negative diagonal.
    pub fn gram<T: Scalar>(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.nrows(), self.diag.len(), "diag operator length mismatch");
        let w = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
            b[(i, j)].scale(self.diag[i].max(0.0).sqrt())
        });
        let mut g = w.ad_mul(&w);
        linalg::hermitize(&mut g);
        g
    }
}
