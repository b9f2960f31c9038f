mod common;

use common::invariants::*;
use common::*;
use proptest::prelude::*;

fn check(c: Check) -> std::result::Result<(), TestCaseError> {
    c.map_err(TestCaseError::fail)
}

proptest! {
    #[test]
    fn polynomial_product_distributes(seed in any::<u64>(), n in 1usize..3) {
        let mut rng = FixtureRng::new(seed);
        let (p, q, r) = (random_matpoly(&mut rng, n), random_matpoly(&mut rng, n), random_matpoly(&mut rng, n));
        check(distributes(&p, &q, &r))?;
    }

    #[test]
    fn evaluation_is_multiplicative(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::PI) {
        let mut rng = FixtureRng::new(seed);
        let (p, q) = (random_matpoly(&mut rng, 2), random_matpoly(&mut rng, 2));
        check(evaluation_multiplies(&p, &q, theta))?;
    }

    #[test]
    fn one_step_division_round_trip(seed in any::<u64>()) {
        check(one_step_round_trip(&mut FixtureRng::new(seed)))?;
    }

    #[test]
    fn identical_specs_reproduce_bits(seed in any::<u64>(), stream in 0u64..4) {
        check(noise_reproducible(seed, stream))?;
    }

    #[test]
    fn config_round_trip_holds(seed in any::<u64>()) {
        let base = shipped_config("example1.json");
        check(config_round_trip(&vary_config(&base, &mut FixtureRng::new(seed))))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_with_inverse_is_identity(seed in any::<u64>(), n in 1usize..3) {
        let r = inverse_is_identity(seed, n, &grid512());
        prop_assume!(r.is_some());
        check(r.unwrap())?;
    }

    #[test]
    fn simplify_keeps_the_response(seed in any::<u64>()) {
        check(simplify_keeps_response(seed, &grid512()))?;
    }

    #[test]
    fn filtering_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        check(filter_linear(seed, alpha, beta))?;
    }

    #[test]
    fn filtering_a_product_composes(seed in any::<u64>()) {
        check(filter_composes(seed))?;
    }

    #[test]
    fn low_rank_data_obey_the_deterministic_channel(seed in any::<u64>(), p in 1usize..3) {
        check(deterministic_residual(seed, p))?;
    }

    #[test]
    fn feedback_spectrum_matches_pointwise_inversion(seed in any::<u64>(), n in 1usize..3) {
        let fx = loop_fixture(seed, n);
        let gap = scaled_gap(feedback_spectrum_gap(&fx, seed, &lowrank::spectra::default_grid(128)));
        prop_assert!(gap < 1e-9, "{gap:e}");
    }

    #[test]
    fn loop_blocks_commute_with_the_channels(seed in any::<u64>(), n in 1usize..3) {
        check(loop_identities(&loop_fixture(seed, n), &lowrank::spectra::default_grid(128)))?;
    }

    #[test]
    fn channel_read_off_a_noiseless_feedback_spectrum(seed in any::<u64>(), n in 1usize..3) {
        let gap = channel_gap(&loop_fixture(seed, n), seed, 0.0, &lowrank::spectra::default_grid(128));
        prop_assert!(gap < 1e-9, "{gap:e}");
    }

    #[test]
    fn output_noise_breaks_the_channel(seed in any::<u64>(), n in 1usize..3, big in any::<bool>()) {
        let sigma2 = if big { 1.0 } else { 0.1 };
        let gap = channel_gap(&loop_fixture(seed, n), seed, sigma2, &lowrank::spectra::default_grid(128));
        prop_assert!(gap > 1e-3, "{gap:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn least_squares_fits_are_stationary_points(seed in any::<u64>()) {
        check(least_squares_stationary(seed))?;
    }

    #[test]
    fn deterministic_channel_is_exact_with_enough_order(seed in any::<u64>(), extra in 0usize..3) {
        check(deterministic_exact(seed, extra))?;
    }

    #[test]
    fn prediction_error_cost_never_increases(seed in any::<u64>()) {
        check(pem_cost_nonincreasing(seed))?;
    }
}

#[test]
fn ar_error_shrinks_with_more_data() {
    let m = ar_error_medians(&[500, 5000, 50000]);
    assert!(m[0] > m[1] && m[1] > m[2], "{m:?}");
}

#[test]
fn runs_write_identical_tagged_artifacts() {
    for (name, seed) in [("example1.json", 3), ("example2.json", 8)] {
        runs_are_byte_identical(&shipped_config(name), seed).unwrap();
    }
}
