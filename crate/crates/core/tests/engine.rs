mod common;

use nalgebra::{DMatrix, DVector};
use robust_bcs::bench::{is_success, normalized_error};
use robust_bcs::scenario::{make_gaussian_instance, make_instance, CorruptionConfig, DoaConfig};
use robust_bcs::vb::{GammaInit, InitPolicy};
use robust_bcs::{
    ideal_solve, run_vb, BcsError, Complex64, HyperParams, ProblemInstance, VbSettings,
};

#[test]
fn zero_observations_give_a_zero_estimate() {
    let a = DMatrix::from_fn(6, 10, |i, j| ((i * 10 + j) as f64).sin());
    let problem = ProblemInstance::new(a, DVector::zeros(6)).unwrap();
    let res = run_vb(&problem, &HyperParams::default(), &VbSettings::default()).unwrap();
    assert!(res.x_hat.iter().all(|v| *v == 0.0));
    assert!(res.iters >= 1);
    res.state.check_invariants().unwrap();
}

#[test]
fn recovers_noiseless_outlier_free_signals() {
    let hyper = HyperParams::default();
    let settings = VbSettings::default();
    let mut successes = 0;
    for seed in 0..100 {
        let (p, truth) = make_gaussian_instance(25, 64, 3, &CorruptionConfig::new(0), 0.0, seed).unwrap();
        let res = run_vb(&p, &hyper, &settings).unwrap();
        let err = normalized_error(&res.x_hat, &truth.x_true).unwrap();
        successes += usize::from(is_success(err, 1e-6));
    }
    assert!(successes >= 95, "{successes}/100 recovered");
}

#[test]
fn flags_a_single_gross_outlier() {
    let hyper = HyperParams::default();
    let settings = VbSettings::default();
    for seed in 0..10 {
        let (p, truth) = make_gaussian_instance(40, 64, 3, &CorruptionConfig::new(1), 0.0, seed).unwrap();
        let res = run_vb(&p, &hyper, &settings).unwrap();
        let bad = truth.outlier_idx[0];
        let z_bad = res.state.z_prob[bad];
        let z_clean = (0..40).filter(|&m| m != bad).map(|m| res.state.z_prob[m]).fold(1.0, f64::min);
        assert!(z_bad < 1e-3 && z_bad < z_clean, "seed {seed}: outlier {z_bad}, clean min {z_clean}");
        assert!(normalized_error(&res.x_hat, &truth.x_true).unwrap() <= 1e-6);
    }
}

#[test]
fn real_data_in_complex_form_keeps_a_real_estimate() {
    let (p, _) = make_gaussian_instance(15, 30, 2, &CorruptionConfig::new(2), 0.01, 3).unwrap();
    let pc = ProblemInstance::new(
        p.a().map(|v| Complex64::new(v, 0.0)),
        p.y().map(|v| Complex64::new(v, 0.0)),
    )
    .unwrap();
    let hyper = HyperParams::default();
    for iters in 1..=15 {
        let settings = VbSettings {
            max_iters: iters,
            ..VbSettings::default()
        };
        let res = run_vb(&pc, &hyper, &settings).unwrap();
        let max_im = res.x_hat.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let max_re = res.x_hat.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        assert!(max_im <= 1e-10 * max_re.max(1.0), "iteration {iters}: imaginary part {max_im}");
        let phi_im = res.state.phi_x.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(phi_im <= 1e-10, "iteration {iters}: covariance imaginary part {phi_im}");
    }
}

#[test]
fn masking_rows_matches_deleting_them() {
    let hyper = HyperParams::default();
    for seed in 0..6 {
        let (p, truth) = make_instance(&DoaConfig::new(20), 3, &CorruptionConfig::new(4), 0.01, seed).unwrap();
        let mut mask = vec![1.0; 20];
        truth.outlier_idx.iter().for_each(|&m| mask[m] = 0.0);
        let init = InitPolicy {
            gamma0: GammaInit::Value(1.0),
            ..InitPolicy::default()
        };
        let masked = VbSettings {
            init,
            fixed_z: Some(mask),
            max_iters: 60,
            ..VbSettings::default()
        };
        let plain = VbSettings {
            init,
            max_iters: 60,
            ..VbSettings::default()
        };
        let a = run_vb(&p, &hyper, &masked).unwrap();
        let b = ideal_solve(&p, &truth, &hyper, &plain).unwrap();
        let scale = b.x_hat.camax().max(1.0);
        let diff = (&a.x_hat - &b.x_hat).camax();
        assert!(diff <= 1e-10 * scale, "seed {seed}: diff {diff}");
        assert_eq!(a.iters, b.iters);
    }
}

#[test]
fn convergence_flag_agrees_with_iteration_count() {
    let hyper = HyperParams::default();
    for (seed, max_iters) in [(0, 5), (1, 40), (2, 500), (3, 1000)] {
        let (p, _) = make_gaussian_instance(20, 40, 3, &CorruptionConfig::new(2), 0.0, seed).unwrap();
        let settings = VbSettings {
            max_iters,
            trace: true,
            ..VbSettings::default()
        };
        let res = run_vb(&p, &hyper, &settings).unwrap();
        assert!(res.iters >= 1 && res.iters <= max_iters);
        if res.converged {
            assert!(res.last_change <= settings.tol);
        } else {
            assert_eq!(res.iters, max_iters);
            assert!(res.last_change > settings.tol);
        }
        assert_eq!(res.trace.len(), res.iters);
        assert!(res.trace.iter().enumerate().all(|(i, t)| t.iter == i + 1));
        assert!(res.trace.iter().all(|t| t.z_min <= t.z_max && t.elbo.is_some()));
    }
}

#[test]
fn pruning_does_not_change_an_easy_recovery() {
    let hyper = HyperParams::default();
    let (p, truth) = make_gaussian_instance(30, 64, 3, &CorruptionConfig::new(2), 0.0, 11).unwrap();
    let full = run_vb(&p, &hyper, &VbSettings::default()).unwrap();
    let pruned = run_vb(&p, &hyper, &VbSettings::with_pruning()).unwrap();
    assert!(normalized_error(&full.x_hat, &truth.x_true).unwrap() <= 1e-6);
    assert!(normalized_error(&pruned.x_hat, &truth.x_true).unwrap() <= 1e-6);
    pruned.state.check_invariants().unwrap();
}

#[test]
fn rejects_invalid_settings() {
    let (p, _) = make_gaussian_instance(5, 8, 1, &CorruptionConfig::new(0), 0.0, 0).unwrap();
    let hyper = HyperParams::default();
    let bad_hyper = HyperParams { c: -1.0, ..hyper };
    assert!(matches!(
        run_vb(&p, &bad_hyper, &VbSettings::default()),
        Err(BcsError::InvalidParameter { name: "c", .. })
    ));
    let cases = [
        VbSettings { max_iters: 0, ..VbSettings::default() },
        VbSettings { tol: 0.0, ..VbSettings::default() },
        VbSettings { fixed_z: Some(vec![1.0; 4]), ..VbSettings::default() },
        VbSettings {
            init: InitPolicy { z0: 1.5, ..InitPolicy::default() },
            ..VbSettings::default()
        },
    ];
    for s in cases {
        assert!(matches!(run_vb(&p, &hyper, &s), Err(BcsError::InvalidParameter { .. })), "{s:?}");
    }
}

#[test]
fn runs_are_deterministic() {
    let (p, _) = make_instance(&DoaConfig::new(18), 3, &CorruptionConfig::new(3), 0.01, 8).unwrap();
    let hyper = HyperParams::default();
    let a = run_vb(&p, &hyper, &VbSettings::default()).unwrap();
    let b = run_vb(&p, &hyper, &VbSettings::default()).unwrap();
    assert_eq!(a.x_hat, b.x_hat);
    assert_eq!(a.state, b.state);
}
