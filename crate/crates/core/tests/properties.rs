//! Invariance properties of the estimators, bias model, and intervals,
//! checked over randomized simulated datasets.

use nalgebra::DMatrix;
use proptest::prelude::*;

use confound_ui::sim::{generate, Design, Overlap, SimulationDesign, ESTIMATOR_COMBOS};
use confound_ui::{
    confounding_bias, effect_estimate, fit_models, inverse_mills, sigma_corrected,
    uncertainty_interval, Arm, Dataset, DesignMatrix, FittedModels, RhoPair, DEFAULT_GRID,
};

fn fitted(seed: u64) -> Option<(Dataset, FittedModels)> {
    let spec = SimulationDesign::new(Design::A, Overlap::Low, 200, 0.2, 0.1).unwrap();
    let g = generate(&spec, confound_ui::RngSeed::new(seed, 0)).ok()?;
    let models = fit_models(&g.data, None).ok()?;
    Some((g.data, models))
}

fn refit(y: Vec<f64>, z: Vec<bool>, design: DesignMatrix) -> Option<(Dataset, FittedModels)> {
    let data = Dataset::new(y, z, design).ok()?;
    let models = fit_models(&data, None).ok()?;
    Some((data, models))
}

proptest! {
    /// The treated and control inverse Mills ratios are reflections of one
    /// another and dominate the relevant linear lower bounds everywhere.
    #[test]
    fn mills_ratios_reflect_and_stay_positive(g in -30.0f64..30.0) {
        let treated = inverse_mills(g, Arm::Treated);
        let control = inverse_mills(-g, Arm::Control);
        prop_assert!((treated - control).abs() <= 1e-12 * treated.abs());
        prop_assert!(treated > 0.0 && treated >= -g);
        prop_assert!(inverse_mills(g, Arm::Control) >= g.max(0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Adding a constant to every outcome moves neither the effect
    /// estimates nor their standard errors.
    #[test]
    fn outcome_shifts_leave_effects_alone(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let Some((data, models)) = fitted(seed) else { return Ok(()) };
        let shifted_y: Vec<f64> = data.y().iter().map(|v| v + shift).collect();
        let Some((shifted, shifted_models)) =
            refit(shifted_y, data.z().to_vec(), data.design().clone()) else { return Ok(()) };

        for (estimand, estimator) in ESTIMATOR_COMBOS {
            let base = effect_estimate(&data, &models, estimand, estimator, false).unwrap();
            let after = effect_estimate(&shifted, &shifted_models, estimand, estimator, false).unwrap();
            prop_assert!((base.value - after.value).abs() < 1e-8, "{estimand:?} {estimator:?}");
            prop_assert!((base.std_error - after.std_error).abs() < 1e-8 * (1.0 + base.std_error));
        }
    }

    /// Rescaling the outcome by a positive factor rescales estimates,
    /// standard errors, corrected residual scales, confounding bias, and
    /// uncertainty-interval endpoints by the same factor.
    #[test]
    fn outcome_scaling_is_equivariant(seed in any::<u64>(), a in 0.2f64..5.0) {
        let Some((data, models)) = fitted(seed) else { return Ok(()) };
        let scaled_y: Vec<f64> = data.y().iter().map(|v| a * v).collect();
        let Some((scaled, scaled_models)) =
            refit(scaled_y, data.z().to_vec(), data.design().clone()) else { return Ok(()) };

        for arm in [Arm::Control, Arm::Treated] {
            let base = sigma_corrected(&data, &models, arm, 0.25).unwrap();
            let after = sigma_corrected(&scaled, &scaled_models, arm, 0.25).unwrap();
            prop_assert!((after - a * base).abs() < 1e-9 * (1.0 + after.abs()));
        }

        let rho = RhoPair::nonnegative(0.3).unwrap();
        for (estimand, estimator) in ESTIMATOR_COMBOS {
            let base = effect_estimate(&data, &models, estimand, estimator, false).unwrap();
            let after = effect_estimate(&scaled, &scaled_models, estimand, estimator, false).unwrap();
            let tol = 1e-9 * (1.0 + after.value.abs());
            prop_assert!((after.value - a * base.value).abs() < tol);
            prop_assert!((after.std_error - a * base.std_error).abs() < tol);

            let bias_base = confounding_bias(&data, &models, estimand, estimator, 0.2, 0.1).unwrap();
            let bias_after =
                confounding_bias(&scaled, &scaled_models, estimand, estimator, 0.2, 0.1).unwrap();
            prop_assert!((bias_after - a * bias_base).abs() < 1e-9 * (1.0 + bias_after.abs()));

            let ui_base =
                uncertainty_interval(&data, &models, &base, &rho, 0.05, DEFAULT_GRID).unwrap();
            let ui_after =
                uncertainty_interval(&scaled, &scaled_models, &after, &rho, 0.05, DEFAULT_GRID).unwrap();
            prop_assert!((ui_after.lower - a * ui_base.lower).abs() < tol);
            prop_assert!((ui_after.upper - a * ui_base.upper).abs() < tol);
        }
    }

    /// Rotating the rows relabels the observations and nothing else.
    #[test]
    fn row_rotation_is_invariant(seed in any::<u64>(), offset in 1usize..199) {
        let Some((data, models)) = fitted(seed) else { return Ok(()) };
        let n = data.n();
        let rotate = |i: usize| (i + offset) % n;

        let y: Vec<f64> = (0..n).map(|i| data.y()[rotate(i)]).collect();
        let z: Vec<bool> = (0..n).map(|i| data.z()[rotate(i)]).collect();
        let values = data.design().values();
        let rotated = DMatrix::from_fn(n, values.ncols(), |r, c| values[(rotate(r), c)]);
        let Some((turned, turned_models)) =
            refit(y, z, DesignMatrix::new(rotated).unwrap()) else { return Ok(()) };

        for (estimand, estimator) in ESTIMATOR_COMBOS {
            let base = effect_estimate(&data, &models, estimand, estimator, false).unwrap();
            let after = effect_estimate(&turned, &turned_models, estimand, estimator, false).unwrap();
            prop_assert!((base.value - after.value).abs() < 1e-9 * (1.0 + base.value.abs()));
            prop_assert!((base.std_error - after.std_error).abs() < 1e-9 * (1.0 + base.std_error));
        }
    }

    /// The confounding bias separates additively over the two correlations,
    /// and the treated correlation never touches an ATT estimator.
    #[test]
    fn confounding_bias_separates_over_the_correlations(
        seed in any::<u64>(),
        r0 in -0.6f64..0.6,
        r1 in -0.6f64..0.6,
    ) {
        let Some((data, models)) = fitted(seed) else { return Ok(()) };
        for (estimand, estimator) in ESTIMATOR_COMBOS {
            let joint = confounding_bias(&data, &models, estimand, estimator, r0, r1).unwrap();
            let first = confounding_bias(&data, &models, estimand, estimator, r0, 0.0).unwrap();
            let second = confounding_bias(&data, &models, estimand, estimator, 0.0, r1).unwrap();
            prop_assert!(
                (joint - first - second).abs() < 1e-12 * (1.0 + joint.abs()),
                "{estimand:?} {estimator:?}: {joint} vs {first} + {second}"
            );
            if estimand == confound_ui::Estimand::Att {
                let other = confounding_bias(&data, &models, estimand, estimator, r0, -r1).unwrap();
                prop_assert_eq!(joint, other);
            }
        }
    }

    /// Wider correlation bounds can only widen the uncertainty interval,
    /// which always contains the confidence interval.
    #[test]
    fn uncertainty_intervals_nest_in_the_rho_bounds(
        seed in any::<u64>(),
        a in 0.01f64..0.3,
        extra in 0.01f64..0.3,
    ) {
        let Some((data, models)) = fitted(seed) else { return Ok(()) };
        let narrow = RhoPair::nonnegative(a).unwrap();
        let wide = RhoPair::nonnegative(a + extra).unwrap();
        for (estimand, estimator) in ESTIMATOR_COMBOS {
            let est = effect_estimate(&data, &models, estimand, estimator, false).unwrap();
            let ci = confound_ui::confidence_interval(&est, 0.05).unwrap();
            let inner = uncertainty_interval(&data, &models, &est, &narrow, 0.05, DEFAULT_GRID).unwrap();
            let outer = uncertainty_interval(&data, &models, &est, &wide, 0.05, DEFAULT_GRID).unwrap();
            prop_assert!(outer.lower <= inner.lower && inner.upper <= outer.upper);
            prop_assert!(inner.lower <= ci.0 && ci.1 <= inner.upper);
        }
    }
}
