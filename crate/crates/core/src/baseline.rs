//! Comparison methods: plain variational SBL, compensation on the augmented
//! system `[A I]`, and the oracle that deletes known outlier rows.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{BcsError, Result};
use crate::field::Scalar;
use crate::linalg::HpdFactor;
use crate::model::{GroundTruth, HyperParams, PosteriorState, ProblemInstance};
use crate::vb::{self, RecoveryResult, TraceRecord, VbSettings};

/// Solvers the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Beta-Bernoulli outlier indicators (the variational engine).
    BpRbcs,
    /// SBL on `[A I][x; e] = y`.
    CRbcs,
    /// SBL after deleting the true outlier rows.
    Ideal,
    /// SBL on the raw data.
    Sbl,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::BpRbcs, Method::CRbcs, Method::Ideal, Method::Sbl];

    pub fn name(self) -> &'static str {
        match self {
            Method::BpRbcs => "bp_rbcs",
            Method::CRbcs => "c_rbcs",
            Method::Ideal => "ideal",
            Method::Sbl => "sbl",
        }
    }

    pub fn needs_truth(self) -> bool {
        self == Method::Ideal
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected bp_rbcs, c_rbcs, ideal or sbl)"))
    }
}

/// Dispatches to the solver for `method`. `truth` is required for
/// [`Method::Ideal`].
pub fn solve<T: Scalar>(
    method: Method,
    problem: &ProblemInstance<T>,
    truth: Option<&GroundTruth<T>>,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<RecoveryResult<T>> {
    match method {
        Method::BpRbcs => vb::run_vb(problem, hyper, settings),
        Method::CRbcs => c_rbcs_solve(problem, hyper, settings),
        Method::Ideal => {
            let truth = truth.ok_or_else(|| {
                BcsError::InvalidInstance("the ideal method needs the outlier locations".into())
            })?;
            ideal_solve(problem, truth, hyper, settings)
        }
        Method::Sbl => sbl_solve(problem.a(), problem.y(), hyper, settings),
    }
}

/// Standard variational sparse Bayesian learning: every observation is
/// trusted, only `q(x)`, `q(α)` and `q(γ)` are updated.
///
/// Honors `max_iters`, `tol`, `jitter`, `init` (except `z0`),
/// `prune_threshold`, `track_elbo` and `trace`; `fixed_z` is ignored.
pub fn sbl_solve<T: Scalar>(
    a: &DMatrix<T>,
    y: &DVector<T>,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<RecoveryResult<T>> {
    let problem = ProblemInstance::new(a.clone(), y.clone())?;
    hyper.validate()?;
    let settings = VbSettings {
        fixed_z: None,
        ..settings.clone()
    };
    settings.validate(problem.m())?;

    let s = T::FIELD.half_or_one();
    let (m, n) = (problem.m(), problem.n());
    let gram = a.ad_mul(a);
    let aty = a.ad_mul(y);

    let y_norm_sq: f64 = y.iter().map(|v| v.modulus_squared()).sum();
    let mut mean_gamma = settings.init.gamma0.resolve(m, y_norm_sq);
    let mut mean_alpha = DVector::from_element(n, settings.init.alpha0);
    let mut mu = DVector::<T>::zeros(n);
    let mut phi = DMatrix::<T>::zeros(n, n);
    let mut alpha_rate = DVector::from_element(n, 1.0 / settings.init.alpha0);
    let (mut gamma_shape, mut gamma_rate) = (1.0, 1.0 / mean_gamma);
    let alpha_shape = hyper.a + s;

    let mut active: Vec<usize> = (0..n).collect();
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut iters = 0;
    let mut elbo_trace = Vec::new();
    let mut trace = Vec::new();

    for iter in 1..=settings.max_iters {
        iters = iter;
        let k = active.len();
        let mut h = DMatrix::from_fn(k, k, |p, q| {
            gram[(active[p], active[q])] * T::from_real(mean_gamma)
        });
        for p in 0..k {
            h[(p, p)] += T::from_real(mean_alpha[active[p]]);
        }
        let rhs = DVector::from_fn(k, |p, _| aty[active[p]] * T::from_real(mean_gamma));
        let factor = HpdFactor::new(&h, settings.jitter)?;
        let mu_act = factor.solve(&rhs);
        let phi_act = factor.inverse();

        let mut new_mu = DVector::zeros(n);
        phi.fill(T::zero());
        for i in 0..n {
            phi[(i, i)] = T::from_real(1.0 / mean_alpha[i]);
        }
        for (p, &i) in active.iter().enumerate() {
            new_mu[i] = mu_act[p];
            for (q, &j) in active.iter().enumerate() {
                phi[(i, j)] = phi_act[(p, q)];
            }
        }
        last_change = vb_relative_change(&new_mu, &mu);
        mu = new_mu;

        for &i in &active {
            let second = mu[i].modulus_squared() + phi[(i, i)].real();
            alpha_rate[i] = hyper.b + s * second;
            mean_alpha[i] = alpha_shape / alpha_rate[i];
        }
        if let Some(limit) = settings.prune_threshold {
            let keep: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| mean_alpha[i] <= limit)
                .collect();
            if keep.len() < active.len() && !keep.is_empty() {
                for &i in active.iter().filter(|i| keep.binary_search(i).is_err()) {
                    mu[i] = T::zero();
                    for j in 0..n {
                        phi[(i, j)] = T::zero();
                        phi[(j, i)] = T::zero();
                    }
                    phi[(i, i)] = T::from_real(1.0 / mean_alpha[i]);
                }
                active = keep;
            }
        }

        // ‖y − Aμ‖² + trace(AᴴA Φ)
        let resid = y - a * &mu;
        let mut fit: f64 = resid.iter().map(|r| r.modulus_squared()).sum();
        for i in 0..n {
            for j in 0..n {
                let p = phi[(j, i)];
                if p != T::zero() {
                    fit += (gram[(i, j)] * p).real();
                }
            }
        }
        gamma_shape = hyper.c + s * m as f64;
        gamma_rate = hyper.d + s * fit.max(0.0);
        mean_gamma = gamma_shape / gamma_rate;

        if settings.track_elbo || settings.trace {
            let state = sbl_state(
                &mu, &phi, alpha_shape, &alpha_rate, gamma_shape, gamma_rate, m, hyper,
            );
            let bound = vb::elbo(&problem, &state, hyper)?;
            if settings.track_elbo {
                elbo_trace.push(bound);
            }
            if settings.trace {
                trace.push(TraceRecord {
                    iter,
                    elbo: Some(bound),
                    z_min: 1.0,
                    z_max: 1.0,
                    mean_gamma,
                    mu_change: last_change,
                });
            }
        }

        if last_change <= settings.tol {
            converged = true;
            break;
        }
    }

    let state = sbl_state(
        &mu, &phi, alpha_shape, &alpha_rate, gamma_shape, gamma_rate, m, hyper,
    );
    Ok(RecoveryResult {
        x_hat: mu,
        state,
        iters,
        converged,
        last_change,
        elbo_trace,
        trace,
        outlier_estimate: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn sbl_state<T: Scalar>(
    mu: &DVector<T>,
    phi: &DMatrix<T>,
    alpha_shape: f64,
    alpha_rate: &DVector<f64>,
    gamma_shape: f64,
    gamma_rate: f64,
    m: usize,
    hyper: &HyperParams,
) -> PosteriorState<T> {
    PosteriorState {
        mu_x: mu.clone(),
        phi_x: phi.clone(),
        alpha_shape,
        alpha_rate: alpha_rate.clone(),
        gamma_shape,
        gamma_rate,
        z_prob: DVector::from_element(m, 1.0),
        pi_a: DVector::from_element(m, 1.0 + hyper.e),
        pi_b: DVector::from_element(m, hyper.f),
    }
}

fn vb_relative_change<T: Scalar>(new: &DVector<T>, old: &DVector<T>) -> f64 {
    let diff = (new - old).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / new.norm()
    }
}

/// `B = [A | I_M]`.
pub fn augmented_dictionary<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    let (m, n) = a.shape();
    DMatrix::from_fn(m, n + m, |i, j| {
        if j < n {
            a[(i, j)]
        } else if j - n == i {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Compensation baseline: SBL on `y = [A I][x; e] + w`, keeping the first
/// `N` coefficients as the signal estimate and the rest as the outlier
/// estimate. The returned state covers all `N + M` coefficients.
pub fn c_rbcs_solve<T: Scalar>(
    problem: &ProblemInstance<T>,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<RecoveryResult<T>> {
    let n = problem.n();
    let b = augmented_dictionary(problem.a());
    let mut res = sbl_solve(&b, problem.y(), hyper, settings)?;
    let u = std::mem::replace(&mut res.x_hat, DVector::zeros(0));
    res.x_hat = u.rows(0, n).into_owned();
    res.outlier_estimate = Some(u.rows(n, problem.m()).into_owned());
    Ok(res)
}

/// Oracle baseline: delete the known outlier rows, then run SBL.
pub fn ideal_solve<T: Scalar>(
    problem: &ProblemInstance<T>,
    truth: &GroundTruth<T>,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<RecoveryResult<T>> {
    let reduced = problem.without_rows(&truth.outlier_idx)?;
    sbl_solve(reduced.a(), reduced.y(), hyper, settings)
}
