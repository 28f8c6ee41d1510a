//! Hermitian positive-definite factorization used by the Gaussian updates.
//!
//! Matrices are symmetrically rescaled to unit diagonal before Cholesky, so
//! precisions spanning many decades (pruned coefficients reach `α ~ 1e12`)
//! do not wreck the factorization. Jitter is added to the scaled matrix,
//! i.e. relative to each diagonal entry.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{BcsError, Result};
use crate::field::Scalar;

/// Largest relative jitter tried before giving up.
pub const MAX_JITTER: f64 = 1e-6;

/// Cholesky factor of `G^{-1/2} H G^{-1/2}` with `G = diag(H)`.
pub struct HpdFactor<T: Scalar> {
    chol: Cholesky<T, Dyn>,
    inv_sqrt_diag: DVector<f64>,
    /// Relative jitter that was needed (0 when the plain matrix factored).
    pub jitter: f64,
}

impl<T: Scalar> HpdFactor<T> {
    /// Factors `h`, escalating the diagonal jitter by decades from
    /// `start_jitter` up to [`MAX_JITTER`]. A zero `start_jitter` tries only
    /// the unperturbed matrix.
    pub fn new(h: &DMatrix<T>, start_jitter: f64) -> Result<Self> {
        let n = h.nrows();
        debug_assert_eq!(n, h.ncols());
        let mut inv_sqrt_diag = DVector::zeros(n);
        for i in 0..n {
            let d = h[(i, i)].real();
            if !(d.is_finite() && d > 0.0) {
                return Err(BcsError::SingularCovariance { scale: 0.0 });
            }
            inv_sqrt_diag[i] = 1.0 / d.sqrt();
        }
        let scaled = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                T::one()
            } else {
                h[(i, j)].scale(inv_sqrt_diag[i] * inv_sqrt_diag[j])
            }
        });

        let mut jitter = 0.0;
        loop {
            let mut m = scaled.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    m[(i, i)] += T::from_real(jitter);
                }
            }
            if let Some(chol) = Cholesky::new(m) {
                return Ok(HpdFactor {
                    chol,
                    inv_sqrt_diag,
                    jitter,
                });
            }
            jitter = if jitter == 0.0 {
                start_jitter
            } else {
                jitter * 10.0
            };
            if start_jitter <= 0.0 || jitter > MAX_JITTER * (1.0 + 1e-9) {
                let last = if start_jitter <= 0.0 { 0.0 } else { jitter / 10.0 };
                return Err(BcsError::SingularCovariance { scale: last });
            }
        }
    }

    /// `H⁻¹ · b`
    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let scaled = DVector::from_fn(b.len(), |i, _| b[i].scale(self.inv_sqrt_diag[i]));
        let sol = self.chol.solve(&scaled);
        DVector::from_fn(sol.len(), |i, _| sol[i].scale(self.inv_sqrt_diag[i]))
    }

    /// `H⁻¹`, exactly Hermitian. Computed as `L⁻ᴴ L⁻¹` from an explicit
    /// triangular inverse, which touches only the lower triangles.
    pub fn inverse(&self) -> DMatrix<T> {
        let n = self.inv_sqrt_diag.len();
        let l = self.chol.l_dirty();
        let ls = l.as_slice();

        // Column j of W = L⁻¹ by forward substitution on e_j.
        let mut w = DMatrix::<T>::zeros(n, n);
        {
            let ws = w.as_mut_slice();
            for j in 0..n {
                let col = &mut ws[j * n..(j + 1) * n];
                col[j] = T::one();
                for k in j..n {
                    let lk = &ls[k * n..(k + 1) * n];
                    let v = col[k] / lk[k];
                    col[k] = v;
                    for (c, &l) in col[k + 1..].iter_mut().zip(&lk[k + 1..]) {
                        *c -= l * v;
                    }
                }
            }
        }

        let g = &self.inv_sqrt_diag;
        let ws = w.as_slice();
        let mut inv = DMatrix::<T>::zeros(n, n);
        for j in 0..n {
            let wj = &ws[j * n..(j + 1) * n];
            for i in j..n {
                let wi = &ws[i * n..(i + 1) * n];
                let acc = wi[i..]
                    .iter()
                    .zip(&wj[i..])
                    .fold(T::zero(), |acc, (&a, &b)| acc + a.conjugate() * b);
                let v = acc.scale(g[i] * g[j]);
                if i == j {
                    inv[(i, i)] = T::from_real(v.real());
                } else {
                    inv[(i, j)] = v;
                    inv[(j, i)] = v.conjugate();
                }
            }
        }
        inv
    }

    /// `ln det H`
    pub fn ln_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        let mut acc = 0.0;
        for i in 0..self.inv_sqrt_diag.len() {
            acc += 2.0 * l[(i, i)].real().ln() - 2.0 * self.inv_sqrt_diag[i].ln();
        }
        acc
    }
}

/// Replaces `h` with `(h + hᴴ)/2` and makes the diagonal exactly real.
pub fn hermitize<T: Scalar>(h: &mut DMatrix<T>) {
    let n = h.nrows();
    for j in 0..n {
        h[(j, j)] = T::from_real(h[(j, j)].real());
        for i in (j + 1)..n {
            let avg = (h[(i, j)] + h[(j, i)].conjugate()).scale(0.5);
            h[(i, j)] = avg;
            h[(j, i)] = avg.conjugate();
        }
    }
}

/// Cholesky test on the unit-diagonal rescaling, no jitter.
pub fn is_positive_definite<T: Scalar>(h: &DMatrix<T>) -> bool {
    h.nrows() == h.ncols() && HpdFactor::new(h, 0.0).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solve_and_inverse_match_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let b = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let mut h = &b * b.adjoint();
        for i in 0..n {
            h[(i, i)] += Complex64::new(10f64.powi(i as i32 * 2), 0.0);
        }
        let f = HpdFactor::new(&h, 1e-12).unwrap();
        assert_eq!(f.jitter, 0.0);
        let dense_inv = h.clone().try_inverse().unwrap();
        let inv = f.inverse();
        let err = (&inv - &dense_inv).norm() / dense_inv.norm();
        assert!(err < 1e-12, "{err}");
        let rhs = DVector::from_fn(n, |i, _| Complex64::new(i as f64, 1.0));
        let x = f.solve(&rhs);
        assert!((&h * &x - &rhs).norm() < 1e-10 * rhs.norm() * h.norm());
        let ln_det = dense_inv.determinant().re.recip().ln();
        assert!((f.ln_det() - ln_det).abs() < 1e-9 * ln_det.abs());
    }

    #[test]
    fn singular_matrix_needs_jitter_or_fails() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let h: DMatrix<f64> = &v * v.transpose();
        assert!(!is_positive_definite(&h));
        let f = HpdFactor::new(&h, 1e-12).unwrap();
        assert!(f.jitter > 0.0 && f.jitter <= MAX_JITTER);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            HpdFactor::new(&neg, 1e-12),
            Err(BcsError::SingularCovariance { scale }) if (scale - 1e-6).abs() < 1e-15
        ));
        let zero_diag = DMatrix::<f64>::zeros(2, 2);
        assert!(HpdFactor::new(&zero_diag, 1e-12).is_err());
    }
}
