//! Property tests for the invariants the library documents: free-space
//! loss scaling laws, distribution support and inversion, steering vector
//! geometry, normalization identities, and lossless round trips of the
//! serialized formats.

use dbchan::catalog::Scenario;
use dbchan::metrics::{med, normalize_delay};
use dbchan::pipeline::{emit_report, parse_report, FitBlock, FitReport, FitRow, ReportFormat};
use dbchan::statdist::{fit_mle, ks_test, DistFamily, DistSpec};
use dbchan::synth::{fspl_db, read_channel_binary, steering_vector, write_channel_binary};

use ndarray::Array3;
use num_complex::Complex64;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![prop::num::f64::NORMAL, prop::num::f64::ZERO]
}

/// Specs that are valid for every family, shape arity included.
fn arb_spec() -> impl Strategy<Value = DistSpec> {
    let family = prop::sample::select(DistFamily::ALL.to_vec());
    (
        family,
        0.1f64..5.0,
        -20.0f64..20.0,
        0.1f64..50.0,
        0.1f64..5.0,
    )
        .prop_map(|(family, shape, loc, scale, shape2)| {
            let shapes: Vec<f64> = match family.shape_count() {
                0 => vec![],
                1 => vec![shape],
                _ => vec![shape, shape2],
            };
            DistSpec::new(family, &shapes, loc, scale).expect("strategy emits valid parameters")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fspl_obeys_the_doubling_laws(
        distance in 0.1f64..500.0,
        freq in 100e9f64..300e9,
    ) {
        let base = fspl_db(distance, freq).unwrap();
        let double_d = fspl_db(2.0 * distance, freq).unwrap();
        let double_f = fspl_db(distance, 2.0 * freq).unwrap();
        prop_assert!((double_d - base - 6.0206).abs() < 1e-6);
        prop_assert!((double_f - base - 6.0206).abs() < 1e-6);
        prop_assert!(base > 0.0);
    }

    #[test]
    fn quantiles_invert_the_cdf(spec in arb_spec(), p in 0.001f64..0.999) {
        let x = spec.quantile(p).unwrap();
        let back = spec.cdf(x);
        prop_assert!((back - p).abs() < 1e-6, "cdf(quantile({p})) = {back} for {spec:?}");
    }

    #[test]
    fn samples_stay_on_support(spec in arb_spec(), seed in 0u64..1_000) {
        let data = spec.sample(64, seed);
        for &x in &data {
            prop_assert!(x.is_finite());
            match spec.family() {
                DistFamily::Normal => {}
                DistFamily::Beta => {
                    prop_assert!(x >= spec.loc() && x <= spec.loc() + spec.scale());
                }
                _ => prop_assert!(x >= spec.loc(), "{x} below loc {} for {spec:?}", spec.loc()),
            }
        }
    }

    #[test]
    fn steering_vectors_have_unit_modulus(
        n in 1usize..16,
        spacing in 0.1f64..2.0,
        angle in -1.57f64..1.57,
    ) {
        let a = steering_vector(n, spacing, angle, Complex64::new(1.0, 0.0));
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(a[0], Complex64::new(1.0, 0.0));
        for z in &a {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_delays_are_nonnegative_with_a_zero_minimum(
        mut delays in prop::collection::vec(0.0f64..2_000.0, 1..40),
        shift in 0.0f64..500.0,
    ) {
        let normalized = normalize_delay(&delays).unwrap();
        prop_assert_eq!(normalized.len(), delays.len());
        prop_assert_eq!(normalized.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
        for &e in &normalized {
            prop_assert!(e >= 0.0);
        }
        for d in &mut delays {
            *d += shift;
        }
        let shifted = normalize_delay(&delays).unwrap();
        for (a, b) in normalized.iter().zip(&shifted) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn med_is_nonnegative_and_translation_invariant(
        delays in prop::collection::vec(0.0f64..2_000.0, 1..40),
        shift in 0.0f64..500.0,
    ) {
        let base = med(&delays).unwrap();
        prop_assert!(base >= 0.0);
        let moved: Vec<f64> = delays.iter().map(|d| d + shift).collect();
        prop_assert!((med(&moved).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn ks_results_are_probabilities(seed in 0u64..500) {
        let spec = DistSpec::new(DistFamily::Normal, &[], 1.0, 2.0).unwrap();
        let data = spec.sample(48, seed);
        let fit = fit_mle(DistFamily::Normal, &data, None).unwrap();
        let (stat, p) = ks_test(&data, &fit).unwrap();
        prop_assert!(stat > 0.0 && stat < 1.0);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn channel_binaries_round_trip(
        dims in (1usize..5, 1usize..4, 1usize..4),
        seed_values in prop::collection::vec(finite(), 2 * 4 * 3 * 3),
    ) {
        let (k, r, t) = dims;
        let mut values = seed_values.into_iter();
        let h = Array3::from_shape_fn((k, r, t), |_| {
            Complex64::new(values.next().unwrap_or(0.25), values.next().unwrap_or(-0.5))
        });
        let mut bytes = Vec::new();
        write_channel_binary(&mut bytes, &h).unwrap();
        let back = read_channel_binary(bytes.as_slice()).unwrap();
        prop_assert_eq!(h, back);
    }
}

fn arb_fit_row() -> impl Strategy<Value = FitRow> {
    let scenario = prop::sample::select(vec![Scenario::Los, Scenario::Nlos]);
    let block = prop::sample::select(vec![FitBlock::Npd, FitBlock::Ndd, FitBlock::Nop]);
    let family = prop::sample::select(DistFamily::ALL.to_vec());
    let text = "[a-zA-Z0-9 ,;:_()\"'/-]{0,24}";
    (
        ("[a-zA-Z0-9 _-]{1,16}", scenario, block, family, text),
        prop::collection::vec(prop::option::of(finite()), 10),
        0u64..10_000,
    )
        .prop_map(
            |((location, scenario, block, family, status), floats, n)| FitRow {
                location,
                scenario,
                block,
                family,
                status,
                ks_statistic: floats[0],
                p_value: floats[1],
                qq_correlation: floats[2],
                loc: floats[3],
                scale: floats[4],
                shape1: floats[5],
                shape2: floats[6],
                n,
                data_min: floats[7],
                data_max: floats[8],
                data_mean: floats[9],
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Reports survive both serialization formats without losing a bit,
    // including awkward strings and full-precision floats.
    #[test]
    fn fit_reports_round_trip_in_both_formats(
        rows in prop::collection::vec(arb_fit_row(), 0..12),
    ) {
        let report = FitReport { rows };
        for format in [ReportFormat::Csv, ReportFormat::Json] {
            let bytes = emit_report(&report, format).unwrap();
            let back = parse_report(&bytes, format).unwrap();
            prop_assert_eq!(&report, &back);
        }
    }
}
