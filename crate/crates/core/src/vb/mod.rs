//! Coordinate-ascent variational inference for the beta-Bernoulli robust
//! model.
//!
//! One sweep updates the factors in the order `q(x) → q(α) → q(γ) → q(z) →
//! q(π)`. Each step is the exact maximizer of the evidence lower bound with
//! the other factors held fixed, so [`elbo`] never decreases across sweeps
//! (pruning excepted).

mod elbo;
mod engine;
mod settings;
mod updates;

pub use elbo::elbo;
pub use engine::{initial_state, run_vb, RecoveryResult, TraceRecord};
pub use settings::{GammaInit, IndicatorRule, InitPolicy, VbSettings};
pub use updates::{
    expected_weighted_residual, log_pi_expectations, row_variances, update_alpha, update_gamma,
    update_pi, update_x, update_z,
};
