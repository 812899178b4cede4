//! Property tests for the structural invariants of the coding, translation,
//! and simulation machinery.

use proptest::prelude::*;
use slidekit::design::AffineMap;
use slidekit::prelude::*;

fn finite_coef() -> impl Strategy<Value = f64> {
    (-10.0..10.0f64).prop_map(|v| (v * 1e6).round() / 1e6)
}

proptest! {
    // Proportional coding is affine and order-preserving, with the observed
    // extremes landing exactly on -1 and +1.
    #[test]
    fn proportional_coding_is_affine_and_monotone(
        mut settings in proptest::collection::vec(-1e3..1e3f64, 2..8),
        lambda in 0.0..1.0f64,
    ) {
        settings.sort_by(f64::total_cmp);
        let min = settings[0];
        let max = *settings.last().unwrap();
        prop_assume!(max - min > 1e-6);

        let coder = ProportionalCoder::from_settings("x", &settings).unwrap();
        prop_assert_eq!(coder.code(min).unwrap(), -1.0);
        prop_assert_eq!(coder.code(max).unwrap(), 1.0);

        // affine: code(lerp) = lerp of codes
        let u = min + lambda * (max - min);
        let coded = coder.code(u).unwrap();
        let expect = -1.0 + 2.0 * lambda;
        prop_assert!((coded - expect).abs() <= 1e-9);

        // order-preserving on the observed settings
        let coded_all: Vec<f64> = settings.iter().map(|v| coder.code(*v).unwrap()).collect();
        for w in coded_all.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-15);
        }
    }

    // Lifting a nested-effects model and specializing it back is the identity
    // on nine-coefficient models over parent levels {-1, 0, 1}.
    #[test]
    fn nem_rsm_round_trip(coeffs in proptest::collection::vec(finite_coef(), 9)) {
        let mut model = RsmModel::new();
        let mut idx = 0;
        for i in 0..=2u8 {
            for j in 0..=2u8 {
                model.set(i, j, coeffs[idx]).unwrap();
                idx += 1;
            }
        }
        let back = nem_to_rsm(&rsm_to_nem(&model, &[-1.0, 0.0, 1.0]).unwrap()).unwrap();
        prop_assert!(model.max_abs_diff(&back) <= 1e-12);
    }

    // Expanding an RCRS model to monomials preserves its values.
    #[test]
    fn rcrs_expansion_agrees_with_direct_evaluation(
        etas in proptest::collection::vec(finite_coef(), 6),
        s in -1.0..1.0f64,
        t in -1.0..1.0f64,
        r in 0.25..2.0f64,
        x_a in -1.0..1.0f64,
        x_b in -1.0..1.0f64,
    ) {
        let model = RcrsModel::new(
            etas[0], etas[1], etas[2], etas[3], etas[4], etas[5],
            AffineMap::new(s, t), r,
        ).unwrap();
        let expanded = rcrs_expand(&model);
        let direct = model.evaluate(x_a, x_b);
        let poly = expanded.evaluate(x_a, x_b);
        prop_assert!((direct - poly).abs() <= 1e-10 * direct.abs().max(1.0));
    }

    // On balanced matched designs the RCRS interaction coefficients vanish for
    // every surface in the additive family with degrees up to 2.
    #[test]
    fn matched_surfaces_eliminate_interactions(
        g1 in proptest::collection::vec(finite_coef(), 1..=3),
        g2 in proptest::collection::vec(finite_coef(), 1..=3),
    ) {
        for design in [slidekit::fixtures::welding(), slidekit::fixtures::nine_run()] {
            let (_, _, spec) = design.sliding_pair().unwrap();
            let surface = SurfaceEq1::new(
                &g1,
                &g2,
                spec.center.unwrap(),
                spec.half_width.unwrap(),
            ).unwrap();
            let report = elimination_check(&surface, &design, 1e-9).unwrap();
            prop_assert!(report.matched);
            prop_assert!(
                report.max_interaction <= 1e-9,
                "interactions {:?}", report.interactions
            );
        }
    }

    // Nested-effects prediction succeeds only at fitted parent levels.
    #[test]
    fn nem_prediction_never_extrapolates_in_the_parent(
        x_a in -2.0..2.0f64,
        x_b in -1.0..1.0f64,
    ) {
        let model = NemModel::new(vec![
            NemLevel { parent_value: -1.0, alpha: 1.0, beta: -0.5, gamma: 0.25 },
            NemLevel { parent_value: 1.0, alpha: 2.0, beta: 0.5, gamma: -0.25 },
        ]).unwrap();
        match predict_nem(&model, x_a, x_b) {
            Ok(_) => prop_assert!(
                model.parent_values().iter().any(|p| (p - x_a).abs() <= 1e-12)
            ),
            Err(Error::OffDesignParentLevel { .. }) => {}
            Err(other) => prop_assert!(false, "unexpected error {other}"),
        }
    }

    // Points outside the cube are always OutsideRm; points inside the cube
    // are never OutsideRm.
    #[test]
    fn classification_respects_the_cube(
        x_a in -3.0..3.0f64,
        x_b in -3.0..3.0f64,
    ) {
        let region = build_region(&slidekit::fixtures::welding()).unwrap();
        let zone = region.classify(x_a, x_b);
        if x_a.abs() > 1.0 + 1e-6 || x_b.abs() > 1.0 + 1e-6 {
            prop_assert_eq!(zone, Zone::OutsideRm);
        } else if x_a.abs() <= 1.0 && x_b.abs() <= 1.0 {
            prop_assert_ne!(zone, Zone::OutsideRm);
        }
    }
}
