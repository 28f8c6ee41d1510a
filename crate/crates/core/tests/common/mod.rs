//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use robust_bcs::{HyperParams, PosteriorState, ProblemInstance, Scalar};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss<T: Scalar>(rng: &mut impl Rng) -> T {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    T::from_parts(re, im)
}

pub fn random_matrix<T: Scalar>(m: usize, n: usize, rng: &mut impl Rng) -> DMatrix<T> {
    DMatrix::from_fn(m, n, |_, _| gauss(rng))
}

pub fn random_problem<T: Scalar>(m: usize, n: usize, rng: &mut impl Rng) -> ProblemInstance<T> {
    let a = random_matrix(m, n, rng);
    let y = DVector::from_fn(m, |_, _| gauss(rng));
    ProblemInstance::new(a, y).unwrap()
}

/// Hermitian positive definite matrix with eigenvalues bounded below by `floor`.
pub fn random_hpd<T: Scalar>(n: usize, floor: f64, rng: &mut impl Rng) -> DMatrix<T> {
    let b: DMatrix<T> = random_matrix(n, n, rng);
    let mut h = &b * b.adjoint() * T::from_real(1.0 / n as f64);
    for i in 0..n {
        h[(i, i)] += T::from_real(floor);
    }
    // exact Hermitian symmetry
    let ht = h.adjoint();
    (h + ht) * T::from_real(0.5)
}

/// A valid posterior with every parameter drawn at random and `q(π)`
/// consistent with `⟨z⟩`.
pub fn random_state<T: Scalar>(
    m: usize,
    n: usize,
    hyper: &HyperParams,
    rng: &mut impl Rng,
) -> PosteriorState<T> {
    let z_prob = DVector::from_fn(m, |_, _| rng.random_range(0.05..0.95));
    PosteriorState {
        mu_x: DVector::from_fn(n, |_, _| gauss(rng)),
        phi_x: random_hpd(n, 0.2, rng),
        alpha_shape: rng.random_range(0.5..3.0),
        alpha_rate: DVector::from_fn(n, |_, _| rng.random_range(0.2..4.0)),
        gamma_shape: rng.random_range(1.0..10.0),
        gamma_rate: rng.random_range(0.5..5.0),
        pi_a: z_prob.map(|z| z + hyper.e),
        pi_b: z_prob.map(|z| 1.0 + hyper.f - z),
        z_prob,
    }
}

pub fn moderate_hyper() -> HyperParams {
    HyperParams {
        a: 1.5,
        b: 0.8,
        c: 2.0,
        d: 0.5,
        e: 0.7,
        f: 0.3,
    }
}

pub fn max_abs_diff<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).modulus())
        .fold(0.0, f64::max)
}

/// Digamma by upward recurrence to `x >= 10`, then the asymptotic series.
pub fn digamma_oracle(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // Bernoulli terms B_2k / (2k)
    let series = x2
        * (1.0 / 12.0
            - x2 * (1.0 / 120.0
                - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 * (1.0 / 132.0 - x2 * 691.0 / 32760.0)))));
    acc + x.ln() - 0.5 / x - series
}

/// `ln Γ(x)` by upward recurrence to `x >= 10`, then Stirling's series.
pub fn ln_gamma_oracle(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= x.ln();
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    let series = (1.0 / 12.0
        - x2 * (1.0 / 360.0 - x2 * (1.0 / 1260.0 - x2 * (1.0 / 1680.0 - x2 / 1188.0))))
        / x;
    acc + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Maximiser of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
