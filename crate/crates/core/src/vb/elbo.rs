use crate::error::{BcsError, Result};
use crate::field::Scalar;
use crate::linalg::HpdFactor;
use crate::model::{HyperParams, PosteriorState, ProblemInstance};
use crate::special::{bernoulli_entropy, digamma, ln_beta, ln_gamma};

use super::updates::ResidualStats;

fn gamma_entropy(shape: f64, rate: f64) -> Result<f64> {
    Ok(shape - rate.ln() + ln_gamma(shape) + (1.0 - shape) * digamma(shape)?)
}

fn beta_entropy(a: f64, b: f64) -> Result<f64> {
    Ok(ln_beta(a, b) - (a - 1.0) * digamma(a)? - (b - 1.0) * digamma(b)?
        + (a + b - 2.0) * digamma(a + b)?)
}

/// Evidence lower bound `E_q[ln p(y, θ)] − E_q[ln q(θ)]`.
///
/// Rows with `z_m = 0` contribute no likelihood term, and the outlier values
/// themselves are not modelled.
pub fn elbo<T: Scalar>(
    problem: &ProblemInstance<T>,
    state: &PosteriorState<T>,
    hyper: &HyperParams,
) -> Result<f64> {
    let field = T::FIELD;
    let s = field.half_or_one();
    let log_norm = field.log_norm_const();
    let n = state.n();
    let mo = state.moments()?;
    let stats = ResidualStats::compute(problem, state, None);

    let e_ln_gamma = digamma(state.gamma_shape)? - state.gamma_rate.ln();
    let mean_gamma = mo.mean_gamma;

    // E ln p(y | x, z, γ)
    let mut lik = 0.0;
    for m in 0..state.m() {
        let z = state.z_prob[m];
        let quad = stats.residual_sq[m] + stats.row_var[m].max(0.0);
        lik += z * (s * e_ln_gamma - log_norm - s * mean_gamma * quad);
    }

    // E ln p(x | α) + E ln p(α) − E ln q(α)
    let dig_a = digamma(state.alpha_shape)?;
    let mut x_alpha = 0.0;
    for i in 0..n {
        let e_ln_alpha = dig_a - state.alpha_rate[i].ln();
        let mean_alpha = mo.mean_alpha[i];
        x_alpha += s * e_ln_alpha - log_norm - s * mean_alpha * mo.second_moment_x[i];
        x_alpha += hyper.a * hyper.b.ln() - ln_gamma(hyper.a) + (hyper.a - 1.0) * e_ln_alpha
            - hyper.b * mean_alpha;
        x_alpha += gamma_entropy(state.alpha_shape, state.alpha_rate[i])?;
    }

    // E ln p(γ) − E ln q(γ)
    let gamma_terms = hyper.c * hyper.d.ln() - ln_gamma(hyper.c) + (hyper.c - 1.0) * e_ln_gamma
        - hyper.d * mean_gamma
        + gamma_entropy(state.gamma_shape, state.gamma_rate)?;

    // E ln p(z | π) + E ln p(π) − E ln q(z) − E ln q(π)
    let mut z_pi = 0.0;
    for m in 0..state.m() {
        let (pa, pb) = (state.pi_a[m], state.pi_b[m]);
        let dig_sum = digamma(pa + pb)?;
        let e_ln_pi = digamma(pa)? - dig_sum;
        let e_ln_1m = digamma(pb)? - dig_sum;
        let z = state.z_prob[m];
        z_pi += z * e_ln_pi + (1.0 - z) * e_ln_1m;
        z_pi += -ln_beta(hyper.e, hyper.f) + (hyper.e - 1.0) * e_ln_pi + (hyper.f - 1.0) * e_ln_1m;
        z_pi += bernoulli_entropy(z) + beta_entropy(pa, pb)?;
    }

    // H[q(x)] = N (s + ln-norm) + s ln det Φ
    let ln_det_phi = HpdFactor::new(&state.phi_x, 1e-12)?.ln_det();
    let x_entropy = n as f64 * (s + log_norm) + s * ln_det_phi;

    let total = lik + x_alpha + gamma_terms + z_pi + x_entropy;
    if !total.is_finite() {
        return Err(BcsError::Numerical("non-finite evidence lower bound".into()));
    }
    Ok(total)
}
