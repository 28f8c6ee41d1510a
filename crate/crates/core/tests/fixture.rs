use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use robust_bcs::fixture::{self, AnyFixture, Fixture};
use robust_bcs::scenario::{make_gaussian_instance, make_instance, CorruptionConfig, DoaConfig};
use robust_bcs::{BcsError, Complex64, ProblemInstance, ScalarField};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(1e-300),
        Just(f64::MAX),
        Just(0.1 + 0.2),
    ]
}

fn complex_instance() -> impl Strategy<Value = ProblemInstance<Complex64>> {
    (1usize..6, 1usize..6).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec((finite(), finite()), m * n),
            prop::collection::vec((finite(), finite()), m),
        )
            .prop_map(move |(a, y)| {
                let a = DMatrix::from_row_iterator(m, n, a.into_iter().map(|(r, i)| Complex64::new(r, i)));
                let y = DVector::from_iterator(m, y.into_iter().map(|(r, i)| Complex64::new(r, i)));
                ProblemInstance::new(a, y).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn complex_text_round_trip_is_bit_exact(
        problem in complex_instance(),
        seed in proptest::option::of(any::<u64>()),
        meta in proptest::option::of("[a-zA-Z0-9 {}:,\"_.-]{0,40}"),
    ) {
        let fx = Fixture { problem, truth: None, seed, meta: meta.map(|m| m.trim().to_string()).filter(|m| !m.is_empty()) };
        match fixture::parse(&fx.to_text()).unwrap() {
            AnyFixture::Complex(back) => {
                let bits = |p: &ProblemInstance<Complex64>| {
                    p.a().iter().chain(p.y().iter()).flat_map(|v| [v.re.to_bits(), v.im.to_bits()]).collect::<Vec<_>>()
                };
                prop_assert_eq!(bits(&back.problem), bits(&fx.problem));
                prop_assert_eq!(back.seed, fx.seed);
                prop_assert_eq!(back.meta, fx.meta);
            }
            AnyFixture::Real(_) => prop_assert!(false, "field changed"),
        }
    }

    #[test]
    fn generated_instances_round_trip_with_truth(seed in any::<u64>(), t in 0usize..4) {
        let (problem, truth) = make_gaussian_instance(6, 9, 2, &CorruptionConfig::new(t), 0.01, seed).unwrap();
        let fx = Fixture { problem, truth: Some(truth), seed: Some(seed), meta: None };
        let back = fixture::parse(&fx.to_text()).unwrap();
        prop_assert_eq!(back, AnyFixture::Real(fx));
    }
}

#[test]
fn file_round_trip_keeps_the_field() {
    let (problem, truth) = make_instance(&DoaConfig::new(5), 2, &CorruptionConfig::new(1), 0.0, 3).unwrap();
    let fx = Fixture {
        problem,
        truth: Some(truth),
        seed: Some(3),
        meta: Some("{\"scenario\":\"doa\"}".into()),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doa.txt");
    fx.write(&path).unwrap();
    let back = fixture::read(&path).unwrap();
    assert_eq!(back.field(), ScalarField::Complex);
    assert_eq!(back, AnyFixture::Complex(fx));
}

#[test]
fn malformed_text_reports_a_line() {
    let (problem, _) = make_gaussian_instance(3, 4, 1, &CorruptionConfig::new(0), 0.0, 1).unwrap();
    let text = Fixture::new(problem).to_text();
    assert!(matches!(fixture::parse("nonsense\n"), Err(BcsError::Format { line: 1, .. })));
    let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
    assert!(matches!(fixture::parse(&truncated), Err(BcsError::Format { .. })));
    let corrupted = text.replacen("field real", "field quaternion", 1);
    assert!(matches!(fixture::parse(&corrupted), Err(BcsError::Format { line: 2, .. })));
    assert!(matches!(
        fixture::read(std::path::Path::new("/nonexistent/fixture.txt")),
        Err(BcsError::Io(_))
    ));
}
