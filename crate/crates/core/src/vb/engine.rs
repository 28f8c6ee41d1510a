use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::field::Scalar;
use crate::model::{HyperParams, PosteriorState, ProblemInstance};

use super::elbo::elbo;
use super::settings::{InitPolicy, VbSettings};
use super::updates::{gaussian_update, update_pi, ResidualStats};

/// One line of the optional per-sweep trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub elbo: Option<f64>,
    pub z_min: f64,
    pub z_max: f64,
    pub mean_gamma: f64,
    pub mu_change: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryResult<T: Scalar> {
    pub x_hat: DVector<T>,
    pub state: PosteriorState<T>,
    pub iters: usize,
    pub converged: bool,
    /// Relative change of `μ_x` in the last sweep.
    pub last_change: f64,
    pub elbo_trace: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    /// Estimated outlier vector, for methods that produce one.
    pub outlier_estimate: Option<DVector<T>>,
}

/// Starting posterior: `μ = 0`, `Φ = I/α0`, `⟨α⟩ = α0`, `⟨γ⟩ = γ0`,
/// `⟨z⟩ = z0` (or the clamped values) and `q(π)` consistent with `⟨z⟩`.
pub fn initial_state<T: Scalar>(
    problem: &ProblemInstance<T>,
    hyper: &HyperParams,
    init: &InitPolicy,
    fixed_z: Option<&[f64]>,
) -> PosteriorState<T> {
    let (m, n) = (problem.m(), problem.n());
    let y_norm_sq: f64 = problem.y().iter().map(|v| v.modulus_squared()).sum();
    let gamma0 = init.gamma0.resolve(m, y_norm_sq);
    let z_prob = match fixed_z {
        Some(z) => DVector::from_column_slice(z),
        None => DVector::from_element(m, init.z0),
    };
    PosteriorState {
        mu_x: DVector::zeros(n),
        phi_x: DMatrix::from_diagonal_element(n, n, T::from_real(1.0 / init.alpha0)),
        alpha_shape: 1.0,
        alpha_rate: DVector::from_element(n, 1.0 / init.alpha0),
        gamma_shape: 1.0,
        gamma_rate: 1.0 / gamma0,
        pi_a: z_prob.map(|z| z + hyper.e),
        pi_b: z_prob.map(|z| 1.0 + hyper.f - z),
        z_prob,
    }
}

pub(crate) fn relative_change<T: Scalar>(new: &DVector<T>, old: &DVector<T>) -> f64 {
    let diff = (new - old).norm();
    let base = new.norm();
    if diff == 0.0 {
        0.0
    } else if base == 0.0 {
        f64::INFINITY
    } else {
        diff / base
    }
}

/// Runs coordinate ascent until the relative change of `μ_x` drops to
/// `settings.tol` or `settings.max_iters` sweeps have run.
pub fn run_vb<T: Scalar>(
    problem: &ProblemInstance<T>,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<RecoveryResult<T>> {
    hyper.validate()?;
    settings.validate(problem.m())?;
    let field = T::FIELD;
    let n = problem.n();
    let fixed_z = settings.fixed_z.as_deref();
    let mut state = initial_state(problem, hyper, &settings.init, fixed_z);

    let mut active: Vec<usize> = (0..n).collect();
    let mut elbo_trace = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut iters = 0;

    for iter in 1..=settings.max_iters {
        iters = iter;
        let mean_alpha = state.alpha_rate.map(|r| state.alpha_shape / r);
        let (mu, phi) = gaussian_update(
            problem.a(),
            problem.y(),
            state.z_prob.as_slice(),
            state.mean_gamma(),
            &mean_alpha,
            Some(&active),
            settings.jitter,
        )?;
        last_change = relative_change(&mu, &state.mu_x);
        state.mu_x = mu;
        state.phi_x = phi;

        let s = field.half_or_one();
        state.alpha_shape = hyper.a + s;
        for &i in &active {
            let second = state.mu_x[i].modulus_squared() + state.phi_x[(i, i)].real();
            state.alpha_rate[i] = hyper.b + s * second;
        }
        if let Some(limit) = settings.prune_threshold {
            let keep: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| state.alpha_shape / state.alpha_rate[i] <= limit)
                .collect();
            if keep.len() < active.len() && !keep.is_empty() {
                for &i in active.iter().filter(|i| keep.binary_search(i).is_err()) {
                    state.mu_x[i] = T::zero();
                    for j in 0..n {
                        state.phi_x[(i, j)] = T::zero();
                        state.phi_x[(j, i)] = T::zero();
                    }
                    state.phi_x[(i, i)] =
                        T::from_real(state.alpha_rate[i] / state.alpha_shape);
                }
                active = keep;
            }
        }

        let stats = ResidualStats::compute(problem, &state, Some(&active));
        let (c, d) = stats.gamma_params(field, state.z_prob.as_slice(), hyper)?;
        state.gamma_shape = c;
        state.gamma_rate = d;

        if fixed_z.is_none() {
            state.z_prob = stats.z_probs(
                field,
                state.z_prob.as_slice(),
                state.mean_gamma(),
                state.mean_ln_gamma()?,
                hyper,
                settings.indicator_rule,
            )?;
            let (pa, pb) = update_pi(&state, hyper);
            state.pi_a = pa;
            state.pi_b = pb;
        }

        #[cfg(debug_assertions)]
        state.check_invariants()?;

        let bound = if settings.track_elbo || settings.trace {
            Some(elbo(problem, &state, hyper)?)
        } else {
            None
        };
        if settings.track_elbo {
            elbo_trace.push(bound.expect("computed above"));
        }
        if settings.trace {
            trace.push(TraceRecord {
                iter,
                elbo: bound,
                z_min: state.z_prob.min(),
                z_max: state.z_prob.max(),
                mean_gamma: state.mean_gamma(),
                mu_change: last_change,
            });
        }

        if last_change <= settings.tol {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        x_hat: state.mu_x.clone(),
        state,
        iters,
        converged,
        last_change,
        elbo_trace,
        trace,
        outlier_estimate: None,
    })
}
