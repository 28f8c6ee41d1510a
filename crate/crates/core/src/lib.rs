//! Robust Bayesian compressed sensing.
//!
//! Recovers a sparse vector `x` from `y = A x + e + w` where a few entries
//! of `y` are corrupted by arbitrary outliers `e`. Each observation carries
//! a binary indicator `z_m` with a beta-Bernoulli prior; observations whose
//! indicator is switched off are excluded from the likelihood. Inference is
//! mean-field variational Bayes ([`vb`]).
//!
//! The crate also ships the two comparison methods ([`baseline`]), the DOA
//! experiment generator ([`scenario`]), an instance fixture format
//! ([`fixture`]) and a Monte Carlo benchmark harness ([`bench`]).

pub mod baseline;
pub mod bench;
pub mod cli;
pub mod error;
pub mod field;
pub mod fixture;
pub mod linalg;
pub mod model;
pub mod scenario;
pub mod special;
pub mod vb;

pub use baseline::{c_rbcs_solve, ideal_solve, sbl_solve, Method};
pub use error::{BcsError, Result};
pub use field::{Scalar, ScalarField};
pub use model::{DiagOperator, GroundTruth, HyperParams, Moments, PosteriorState, ProblemInstance};
pub use num_complex::Complex64;
pub use vb::{run_vb, RecoveryResult, VbSettings};
