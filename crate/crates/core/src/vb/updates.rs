use nalgebra::{DMatrix, DVector};

use crate::error::{BcsError, Result};
use crate::field::{Scalar, ScalarField};
use crate::linalg::HpdFactor;
use crate::model::{DiagOperator, HyperParams, PosteriorState, ProblemInstance};
use crate::special::{digamma, logistic};

use super::IndicatorRule;

/// `q(x)` given `⟨γ⟩`, `⟨z⟩` and `⟨α⟩`, restricted to the `active` columns.
///
/// Inactive coefficients get mean 0, variance `1/⟨α_n⟩` and no correlation
/// with the rest.
pub(crate) fn gaussian_update<T: Scalar>(
    a: &DMatrix<T>,
    y: &DVector<T>,
    z: &[f64],
    mean_gamma: f64,
    mean_alpha: &DVector<f64>,
    active: Option<&[usize]>,
    jitter: f64,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let n = a.ncols();
    let owned;
    let (a_act, alpha_act) = match active {
        Some(idx) if idx.len() < n => {
            owned = a.select_columns(idx.iter());
            (&owned, mean_alpha.select_rows(idx.iter()))
        }
        _ => (a, mean_alpha.clone()),
    };
    let k = a_act.ncols();

    let dz = DiagOperator::new(z);
    let mut h = dz.gram(a_act) * T::from_real(mean_gamma);
    for i in 0..k {
        h[(i, i)] += T::from_real(alpha_act[i]);
    }
    let rhs = a_act.ad_mul(&dz.apply(y)) * T::from_real(mean_gamma);

    let factor = HpdFactor::new(&h, jitter)?;
    let mu_act = factor.solve(&rhs);
    let phi_act = factor.inverse();

    match active {
        Some(idx) if idx.len() < n => {
            let mut mu = DVector::zeros(n);
            let mut phi = DMatrix::zeros(n, n);
            for i in 0..n {
                phi[(i, i)] = T::from_real(1.0 / mean_alpha[i]);
            }
            for (p, &i) in idx.iter().enumerate() {
                mu[i] = mu_act[p];
                for (q, &j) in idx.iter().enumerate() {
                    phi[(i, j)] = phi_act[(p, q)];
                }
            }
            Ok((mu, phi))
        }
        _ => Ok((mu_act, phi_act)),
    }
}

/// `q(x)` update: `Φ = (⟨γ⟩AᴴD_zA + D_α)⁻¹`, `μ = ⟨γ⟩ΦAᴴD_z y`.
pub fn update_x<T: Scalar>(
    problem: &ProblemInstance<T>,
    state: &PosteriorState<T>,
    jitter: f64,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let mo = state.moments()?;
    gaussian_update(
        problem.a(),
        problem.y(),
        mo.z_mean.as_slice(),
        mo.mean_gamma,
        &mo.mean_alpha,
        None,
        jitter,
    )
}

/// `q(α)` update. Real: `ã = a + 1/2`, `b̃_n = b + ⟨x_n²⟩/2`;
/// complex: `ã = a + 1`, `b̃_n = b + ⟨|x_n|²⟩`.
pub fn update_alpha<T: Scalar>(
    state: &PosteriorState<T>,
    hyper: &HyperParams,
) -> Result<(f64, DVector<f64>)> {
    let s = T::FIELD.half_or_one();
    let mo = state.moments()?;
    let rate = mo.second_moment_x.map(|v| hyper.b + s * v);
    Ok((hyper.a + s, rate))
}

/// `a_m Φ a_mᴴ` for every row of `a`.
pub fn row_variances<T: Scalar>(a: &DMatrix<T>, phi: &DMatrix<T>) -> DVector<f64> {
    let p = a * phi;
    DVector::from_fn(a.nrows(), |m, _| {
        (0..a.ncols())
            .map(|n| (p[(m, n)] * a[(m, n)].conjugate()).real())
            .sum()
    })
}

/// Per-row residual moments of the current `q(x)`.
#[derive(Debug, Clone)]
pub(crate) struct ResidualStats {
    /// `|y_m − a_m μ|²`
    pub residual_sq: DVector<f64>,
    /// `a_m Φ a_mᴴ`
    pub row_var: DVector<f64>,
}

impl ResidualStats {
    pub(crate) fn compute<T: Scalar>(
        problem: &ProblemInstance<T>,
        state: &PosteriorState<T>,
        active: Option<&[usize]>,
    ) -> Self {
        let a = problem.a();
        let n = a.ncols();
        match active {
            Some(idx) if idx.len() < n => {
                let a_act = a.select_columns(idx.iter());
                let mu_act = state.mu_x.select_rows(idx.iter());
                let phi_act = DMatrix::from_fn(idx.len(), idx.len(), |p, q| {
                    state.phi_x[(idx[p], idx[q])]
                });
                let resid = problem.y() - &a_act * mu_act;
                let mut row_var = row_variances(&a_act, &phi_act);
                let mut is_active = vec![false; n];
                idx.iter().for_each(|&i| is_active[i] = true);
                for j in (0..n).filter(|&j| !is_active[j]) {
                    let v = state.phi_x[(j, j)].real();
                    for m in 0..a.nrows() {
                        row_var[m] += a[(m, j)].modulus_squared() * v;
                    }
                }
                ResidualStats {
                    residual_sq: resid.map(|r| r.modulus_squared()),
                    row_var,
                }
            }
            _ => {
                let resid = problem.y() - a * &state.mu_x;
                ResidualStats {
                    residual_sq: resid.map(|r| r.modulus_squared()),
                    row_var: row_variances(a, &state.phi_x),
                }
            }
        }
    }

    /// `(y − Aμ)ᴴ D_z (y − Aμ) + trace(Aᴴ D_z A Φ)`, floored at zero.
    pub(crate) fn weighted_total(&self, z: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        let mut scale = 0.0;
        for (m, &zm) in z.iter().enumerate() {
            total += zm * (self.residual_sq[m] + self.row_var[m]);
            scale += zm * (self.residual_sq[m] + self.row_var[m].abs());
        }
        if !total.is_finite() {
            return Err(BcsError::Numerical("non-finite expected residual".into()));
        }
        if total < -1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(BcsError::Numerical(format!(
                "expected weighted residual is negative ({total:e})"
            )));
        }
        Ok(total.max(0.0))
    }

    pub(crate) fn gamma_params(
        &self,
        field: ScalarField,
        z: &[f64],
        hyper: &HyperParams,
    ) -> Result<(f64, f64)> {
        let s = field.half_or_one();
        let shape = hyper.c + s * z.iter().sum::<f64>();
        let rate = hyper.d + s * self.weighted_total(z)?;
        Ok((shape, rate))
    }

    pub(crate) fn z_probs(
        &self,
        field: ScalarField,
        z_current: &[f64],
        mean_gamma: f64,
        ln_gamma_mean: f64,
        hyper: &HyperParams,
        rule: IndicatorRule,
    ) -> Result<DVector<f64>> {
        let (s, bonus) = match rule {
            IndicatorRule::Standard => (0.5, 0.0),
            IndicatorRule::Exact => {
                let s = field.half_or_one();
                (s, s * ln_gamma_mean - field.log_norm_const())
            }
        };
        let mut out = DVector::zeros(z_current.len());
        for (m, &zm) in z_current.iter().enumerate() {
            let (ln_pi, ln_1m_pi) = log_pi_expectations(zm, hyper.e, hyper.f)?;
            let l = ln_pi - ln_1m_pi + bonus
                - mean_gamma * s * (self.residual_sq[m] + self.row_var[m].max(0.0));
            if l.is_nan() {
                return Err(BcsError::Numerical(format!("NaN log-odds at row {m}")));
            }
            out[m] = logistic(l);
        }
        Ok(out)
    }
}

/// `E[(y − Ax)ᴴ D_z (y − Ax)]` under `q(x)`.
pub fn expected_weighted_residual<T: Scalar>(
    problem: &ProblemInstance<T>,
    state: &PosteriorState<T>,
) -> Result<f64> {
    ResidualStats::compute(problem, state, None).weighted_total(state.z_prob.as_slice())
}

/// `q(γ)` update. Real: `c̃ = c + Σ⟨z_m⟩/2`, `d̃ = d + E[...]/2`; complex
/// drops both halves.
pub fn update_gamma<T: Scalar>(
    problem: &ProblemInstance<T>,
    state: &PosteriorState<T>,
    hyper: &HyperParams,
) -> Result<(f64, f64)> {
    ResidualStats::compute(problem, state, None).gamma_params(
        T::FIELD,
        state.z_prob.as_slice(),
        hyper,
    )
}

/// `(⟨ln π_m⟩, ⟨ln(1 − π_m)⟩)` from the current `⟨z_m⟩`:
/// `Ψ(e + z) − Ψ(e + f + 1)` and `Ψ(1 + f − z) − Ψ(e + f + 1)`.
pub fn log_pi_expectations(z: f64, e: f64, f: f64) -> Result<(f64, f64)> {
    let norm = digamma(e + f + 1.0)?;
    Ok((digamma(e + z)? - norm, digamma(1.0 + f - z)? - norm))
}

/// `q(z)` update, evaluated as a log-odds followed by the logistic function.
/// See [`IndicatorRule`] for the two available forms of the log-odds.
pub fn update_z<T: Scalar>(
    problem: &ProblemInstance<T>,
    state: &PosteriorState<T>,
    hyper: &HyperParams,
    rule: IndicatorRule,
) -> Result<DVector<f64>> {
    ResidualStats::compute(problem, state, None).z_probs(
        T::FIELD,
        state.z_prob.as_slice(),
        state.mean_gamma(),
        state.mean_ln_gamma()?,
        hyper,
        rule,
    )
}

/// `q(π_m) = Beta(⟨z_m⟩ + e, 1 + f − ⟨z_m⟩)`.
pub fn update_pi<T: Scalar>(
    state: &PosteriorState<T>,
    hyper: &HyperParams,
) -> (DVector<f64>, DVector<f64>) {
    (
        state.z_prob.map(|z| z + hyper.e),
        state.z_prob.map(|z| 1.0 + hyper.f - z),
    )
}
