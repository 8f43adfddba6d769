//! End-to-end checks that chain samplers, estimators, oracles and I/O.

use planar_diffraction::io::{parse_window_csv, read_grid_pgm, window_csv, write_grid_pgm};
use planar_diffraction::job::verify::vanishing_sum_queries;
use planar_diffraction::{
    autocorr_table, correlation, expected_eta, ledrappier_corr_oracle, periodogram, Complex64, CorrelationQuery,
    LatticeVector, SamplerSpec, System, WeightLaw,
};
use proptest::prelude::*;

fn all_systems() -> Vec<System> {
    vec![
        System::Bernoulli {
            law: WeightLaw::fair_coin(),
        },
        System::Bernoulli {
            law: WeightLaw::UniformCircle,
        },
        System::Ledrappier,
        System::Times23 { guard_bits: 64 },
        System::RudinShapiro,
    ]
}

#[test]
fn csv_round_trip_is_exact_for_every_system() {
    for system in all_systems() {
        let w = SamplerSpec::new(system.clone(), 23, 17, 4).sample().unwrap();
        let back = parse_window_csv(&window_csv(&w)).unwrap();
        assert_eq!(back, w, "{}", system.name());
    }
}

#[test]
fn sampling_is_reproducible() {
    for system in all_systems() {
        let spec = SamplerSpec::new(system, 40, 30, 11);
        assert_eq!(window_csv(&spec.sample().unwrap()), window_csv(&spec.sample().unwrap()));
    }
}

#[test]
fn biased_coin_autocorrelation_matches_the_squared_mean() {
    let law = WeightLaw::Rademacher { p: 0.7 };
    let system = System::Bernoulli { law };
    let w = SamplerSpec::square(system.clone(), 512, 21).sample().unwrap();
    let table = autocorr_table(&w, 4).unwrap();
    for e in &table.entries {
        let expected = expected_eta(&system, e.z);
        assert!(
            (e.value - expected).norm() < 0.02,
            "z = {}: {} vs {}",
            e.z,
            e.value,
            expected
        );
    }
    assert!((expected_eta(&system, LatticeVector::E1).re - 0.16).abs() < 1e-12);
}

#[test]
fn times23_windows_satisfy_vanishing_sum_identities() {
    let w = SamplerSpec::square(System::Times23 { guard_bits: 64 }, 48, 2)
        .sample()
        .unwrap();
    for q in vanishing_sum_queries(5, 100) {
        let v = correlation(&w, &q).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-9, "{q}: {v}");
    }
}

#[test]
fn pgm_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("grid.pgm");
    let w = SamplerSpec::square(System::Ledrappier, 64, 8).sample().unwrap();
    let grid = periodogram(&w);
    write_grid_pgm(&grid, &path, 4.0).unwrap();
    let back = read_grid_pgm(&path).unwrap();
    let q = 4.0 / 65535.0;
    for (a, b) in grid.values.iter().zip(&back.values) {
        assert!((a.min(4.0) - b).abs() <= q / 2.0 + 1e-12);
    }
}

fn arb_query() -> impl Strategy<Value = CorrelationQuery> {
    prop::collection::vec(((-6i64..=6, -6i64..=6), -3i64..=3), 1..=5).prop_map(|terms| {
        CorrelationQuery::new(
            terms
                .into_iter()
                .map(|((a, b), m)| (LatticeVector::new(a, b), m))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Where the oracle says 1 the identity holds on every configuration,
    /// so the window average is exactly 1.
    #[test]
    fn ledrappier_identities_hold_pointwise(q in arb_query(), seed in any::<u64>()) {
        let w = SamplerSpec::square(System::Ledrappier, 24, seed).sample().unwrap();
        if ledrappier_corr_oracle(&q).is_one() {
            prop_assert_eq!(correlation(&w, &q).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn translated_windows_give_translated_correlations(
        q in arb_query(),
        t in (-50i64..50, -50i64..50),
    ) {
        let w = SamplerSpec::square(System::Ledrappier, 20, 3).sample().unwrap();
        let shifted = w.translate(LatticeVector::new(t.0, t.1));
        prop_assert_eq!(correlation(&w, &q).unwrap(), correlation(&shifted, &q).unwrap());
    }
}
