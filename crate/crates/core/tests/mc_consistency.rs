//! Large-sample agreement between the estimators and the design oracles.
//!
//! Each test draws one big sample from a known design and checks the
//! estimates against the tabled population values, using the estimator's
//! own standard error as the yardstick. Everything is seeded, so these
//! are deterministic regressions rather than statistical coin flips.

use confound_ui::sim::{
    generate, model_bias_or, Design, Overlap, SimulationDesign, ESTIMATOR_COMBOS,
};
use confound_ui::variance::{
    large_sample_var_or_ate, large_sample_var_or_att, sandwich_var_or_ate, sandwich_var_or_att,
};
use confound_ui::{
    effect_estimate, fit_models, sigma_corrected, Arm, Estimand, EstimatorKind, RngSeed,
};

fn target(truth: &confound_ui::sim::truth::DesignTruth, estimand: Estimand, rho: f64) -> f64 {
    match estimand {
        Estimand::Att => truth.att(rho, rho),
        Estimand::Ate => truth.ate,
    }
}

#[test]
fn estimators_recover_design_a_truth_in_large_samples() {
    let spec = SimulationDesign::new(Design::A, Overlap::Low, 100_000, 0.0, 0.0).unwrap();
    let g = generate(&spec, RngSeed::new(501, 0)).unwrap();
    let models = fit_models(&g.data, None).unwrap();
    for (estimand, estimator) in ESTIMATOR_COMBOS {
        let est = effect_estimate(&g.data, &models, estimand, estimator, false).unwrap();
        let want = target(&g.truth, estimand, 0.0);
        assert!(
            (est.value - want).abs() < 4.0 * est.std_error,
            "{estimand:?} {estimator:?}: {} vs {want} (se {})",
            est.value,
            est.std_error
        );
    }
}

#[test]
fn estimators_recover_design_c_truth_in_large_samples() {
    let spec = SimulationDesign::new(Design::C, Overlap::High, 100_000, 0.0, 0.0).unwrap();
    let g = generate(&spec, RngSeed::new(502, 0)).unwrap();
    let models = fit_models(&g.data, None).unwrap();
    for (estimand, estimator) in ESTIMATOR_COMBOS {
        let est = effect_estimate(&g.data, &models, estimand, estimator, false).unwrap();
        let want = target(&g.truth, estimand, 0.0);
        assert!(
            (est.value - want).abs() < 4.0 * est.std_error,
            "{estimand:?} {estimator:?}: {} vs {want} (se {})",
            est.value,
            est.std_error
        );
    }
}

/// Design B misspecifies the outcome regressions but keeps the treatment
/// model correct. The DR estimators must still land on the truth, while
/// the OR deviation is accounted for by the realized projection bias.
#[test]
fn dr_is_consistent_under_outcome_misspecification() {
    let spec = SimulationDesign::new(Design::B, Overlap::High, 200_000, 0.0, 0.0).unwrap();
    let g = generate(&spec, RngSeed::new(503, 0)).unwrap();
    let models = fit_models(&g.data, None).unwrap();

    for estimand in [Estimand::Att, Estimand::Ate] {
        let est =
            effect_estimate(&g.data, &models, estimand, EstimatorKind::DoublyRobust, false).unwrap();
        let want = target(&g.truth, estimand, 0.0);
        assert!(
            (est.value - want).abs() < 4.0 * est.std_error,
            "DR {estimand:?}: {} vs {want}",
            est.value
        );
    }

    let bias = model_bias_or(&g, &models).unwrap();
    for (estimand, predicted) in [(Estimand::Att, bias.att), (Estimand::Ate, bias.ate)] {
        let est = effect_estimate(&g.data, &models, estimand, EstimatorKind::OutcomeRegression, false)
            .unwrap();
        let want = target(&g.truth, estimand, 0.0);
        assert!(
            (est.value - want - predicted).abs() < 5.0 * est.std_error,
            "OR {estimand:?}: deviation {} vs predicted {predicted}",
            est.value - want
        );
    }
}

/// With correlated errors the arm regressions absorb part of the selection
/// effect, so the raw residual scale is biased for the structural one; the
/// corrected scale at the generating rho must recover it.
#[test]
fn corrected_sigma_recovers_the_unit_error_scale() {
    let spec = SimulationDesign::new(Design::A, Overlap::Low, 30_000, 0.3, 0.3).unwrap();
    let g = generate(&spec, RngSeed::new(504, 0)).unwrap();
    let models = fit_models(&g.data, None).unwrap();

    for arm in [Arm::Control, Arm::Treated] {
        let corrected = sigma_corrected(&g.data, &models, arm, 0.3).unwrap();
        let raw = models.ols(arm).residual_variance.sqrt();
        assert!((corrected - 1.0).abs() < 0.02, "{arm:?}: corrected {corrected}");
        assert!(
            (corrected - 1.0).abs() < (raw - 1.0).abs(),
            "{arm:?}: corrected {corrected} should beat raw {raw}"
        );
    }
}

#[test]
fn large_sample_or_variances_approach_the_sandwich_ones() {
    let spec = SimulationDesign::new(Design::A, Overlap::Low, 2_000, 0.0, 0.0).unwrap();
    let g = generate(&spec, RngSeed::new(505, 0)).unwrap();
    let models = fit_models(&g.data, None).unwrap();

    let pairs = [
        (
            large_sample_var_or_att(&g.data, &models).unwrap(),
            sandwich_var_or_att(&g.data, &models).unwrap(),
        ),
        (
            large_sample_var_or_ate(&g.data, &models).unwrap(),
            sandwich_var_or_ate(&g.data, &models).unwrap(),
        ),
    ];
    for (ls, sw) in pairs {
        assert!((ls / sw - 1.0).abs() < 0.15, "large-sample {ls} vs sandwich {sw}");
    }
}
