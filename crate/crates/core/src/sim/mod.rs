//! Simulation designs, data generation, imbalance measures, and the
//! Monte Carlo study harness.
//!
//! Four designs are provided. A and C have linear structural functions
//! (the outcome models are correctly specified); B and D build their
//! outcomes from piecewise functions chosen to make polynomial
//! approximation difficult. Each design comes in a low and a high
//! propensity-imbalance variant selected by the treatment coefficients.

mod study;
pub mod truth;

pub use study::{
    run_study, EstimateRecord, Failure, ReplicationRecord, StudyResult, StudySpec, UiSpec,
    UiSummary, EstimatorSummary, ESTIMATOR_COMBOS,
};

use nalgebra::DVector;

use crate::design::DesignMatrix;
use crate::dist::normal_cdf;
use crate::error::{Error, Result};
use crate::estimators::{Dataset, Estimand, EstimatorKind, FittedModels};
use crate::mvn::{error_correlation, sample_mvn_with, RngSeed};
use truth::{truth, DesignTruth};

/// The four data-generating designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    A,
    B,
    C,
    D,
}

impl Design {
    pub fn covariate_count(self) -> usize {
        match self {
            Design::A | Design::B => 1,
            Design::C | Design::D => 5,
        }
    }

    /// Whether the arm-specific outcome models are linear in the covariates.
    pub fn linear_outcomes(self) -> bool {
        matches!(self, Design::A | Design::C)
    }
}

impl std::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Design::A),
            "B" => Ok(Design::B),
            "C" => Ok(Design::C),
            "D" => Ok(Design::D),
            other => Err(Error::invalid_argument(format!("unknown design {other:?}"))),
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Design::A => write!(f, "A"),
            Design::B => write!(f, "B"),
            Design::C => write!(f, "C"),
            Design::D => write!(f, "D"),
        }
    }
}

/// Propensity imbalance level; `Low` gives well-overlapping arms, `High`
/// strongly separated ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlap {
    Low,
    High,
}

impl std::str::FromStr for Overlap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Overlap::Low),
            "high" => Ok(Overlap::High),
            other => Err(Error::invalid_argument(format!("unknown overlap level {other:?}"))),
        }
    }
}

impl std::fmt::Display for Overlap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Overlap::Low => write!(f, "low"),
            Overlap::High => write!(f, "high"),
        }
    }
}

/// Treatment-model coefficients (with intercept) for a design and overlap
/// level.
pub fn gamma(design: Design, overlap: Overlap) -> DVector<f64> {
    let slice: &[f64] = match (design.covariate_count(), overlap) {
        (1, Overlap::Low) => &[-0.27, 0.3],
        (1, Overlap::High) => &[-0.3, 0.65],
        (_, Overlap::Low) => &[-0.27, 0.2, -0.15, 0.05, 0.15, -0.1],
        (_, Overlap::High) => &[-0.3, 0.5, -0.25, 0.15, 0.25, -0.15],
    };
    DVector::from_row_slice(slice)
}

/// A fully specified generating process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationDesign {
    pub design: Design,
    pub overlap: Overlap,
    pub n: usize,
    pub rho0: f64,
    pub rho1: f64,
}

impl SimulationDesign {
    pub fn new(design: Design, overlap: Overlap, n: usize, rho0: f64, rho1: f64) -> Result<Self> {
        if n < 50 {
            return Err(Error::InvalidDesign {
                reason: format!("sample size {n} is below the minimum of 50"),
            });
        }
        for rho in [rho0, rho1] {
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::InvalidDesign {
                    reason: format!("error correlation {rho} is outside [-1, 1]"),
                });
            }
        }
        Ok(SimulationDesign { design, overlap, n, rho0, rho1 })
    }

    pub fn truth(&self) -> DesignTruth {
        truth(self.design, self.overlap)
    }
}

/// First piecewise structural function.
pub fn h0(x: f64) -> f64 {
    if x < -1.5 {
        0.15 - x - 0.4 * x * x
    } else if x < 1.0 {
        1.5 - x + 0.5 * x * x + x * x * x
    } else if x <= 2.0 {
        1.75 - 0.25 * x + 0.5 * x * x
    } else {
        2.25 + 0.5 * x
    }
}

/// Second piecewise structural function.
pub fn h1(x: f64) -> f64 {
    if x < -1.0 {
        0.2 * x - 0.1 * x * x
    } else if x < 1.0 {
        0.3 * x
    } else if x <= 3.0 {
        0.4 - 0.1 * x * x
    } else {
        -0.2 - 0.1 * x
    }
}

/// A generated sample along with everything only the simulator can know:
/// the structural values, the latent errors, and the true propensities.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub data: Dataset,
    pub f0: DVector<f64>,
    pub f1: DVector<f64>,
    /// Treatment index gamma'x at the generating coefficients.
    pub true_index: DVector<f64>,
    pub true_propensity: DVector<f64>,
    pub eta: DVector<f64>,
    pub eps0: DVector<f64>,
    pub eps1: DVector<f64>,
    /// Number of Bernoulli probabilities clamped into [0.001, 0.999].
    pub clamped: usize,
    pub truth: DesignTruth,
}

impl GeneratedData {
    /// True propensity scores split by realized arm, for imbalance measures.
    pub fn propensity_by_arm(&self) -> (Vec<f64>, Vec<f64>) {
        let mut treated = Vec::new();
        let mut control = Vec::new();
        for i in 0..self.data.n() {
            if self.data.z()[i] {
                treated.push(self.true_propensity[i]);
            } else {
                control.push(self.true_propensity[i]);
            }
        }
        (treated, control)
    }
}

/// Draws one dataset from the design. Deterministic in the seed; study
/// replication r uses stream r of the study seed.
pub fn generate(spec: &SimulationDesign, seed: RngSeed) -> Result<GeneratedData> {
    use rand::Rng;
    use rand_distr::StandardNormal;

    let mut rng = seed.rng();
    let n = spec.n;
    let mut clamped = 0usize;

    let covariates: Vec<Vec<f64>> = match spec.design.covariate_count() {
        1 => {
            let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            vec![x]
        }
        _ => {
            let x1: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let x2: Vec<f64> = x1
                .iter()
                .map(|&v| {
                    let p = clamp_probability(0.5 + 0.05 * v, &mut clamped);
                    f64::from(rng.gen::<f64>() < p)
                })
                .collect();
            let x3: Vec<f64> = x1.iter().map(|&v| 0.015 * v + rng.gen_range(-0.5..0.5)).collect();
            let x4: Vec<f64> = x3
                .iter()
                .map(|&v| {
                    let p = clamp_probability(0.4 + 0.2 * v, &mut clamped);
                    f64::from(rng.gen::<f64>() < p)
                })
                .collect();
            let x5: Vec<f64> = (0..n)
                .map(|i| {
                    0.04 * x1[i] + 0.15 * x2[i] + 0.05 * x3[i]
                        + rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            vec![x1, x2, x3, x4, x5]
        }
    };

    let errors = sample_mvn_with(
        &DVector::zeros(3),
        &error_correlation(spec.rho0, spec.rho1),
        &mut rng,
        n,
    )?;
    let eta = errors.column(0).into_owned();
    let eps0 = errors.column(1).into_owned();
    let eps1 = errors.column(2).into_owned();

    let design_matrix = DesignMatrix::from_covariates(n, &covariates)?;
    let coef = gamma(spec.design, spec.overlap);
    let index = design_matrix.linear_predictor(&coef);

    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut f0 = DVector::zeros(n);
    let mut f1 = DVector::zeros(n);
    let mut propensity = DVector::zeros(n);
    for i in 0..n {
        let (v0, v1) = structural_values(spec.design, &covariates, i);
        f0[i] = v0;
        f1[i] = v1;
        propensity[i] = normal_cdf(index[i]);
        let zi = index[i] + eta[i] > 0.0;
        z.push(zi);
        y.push(if zi { v1 + eps1[i] } else { v0 + eps0[i] });
    }

    let data = Dataset::new(y, z, design_matrix)?;
    Ok(GeneratedData {
        data,
        f0,
        f1,
        true_index: index,
        true_propensity: propensity,
        eta,
        eps0,
        eps1,
        clamped,
        truth: spec.truth(),
    })
}

fn clamp_probability(p: f64, clamped: &mut usize) -> f64 {
    if (0.001..=0.999).contains(&p) {
        p
    } else {
        *clamped += 1;
        p.clamp(0.001, 0.999)
    }
}

fn structural_values(design: Design, covariates: &[Vec<f64>], i: usize) -> (f64, f64) {
    match design {
        Design::A => {
            let x = covariates[0][i];
            (0.5 + 0.5 * x, 2.5 + 1.5 * x)
        }
        Design::B => {
            let x = covariates[0][i];
            (h0(x), h1(x))
        }
        Design::C => {
            let (x1, x2, x3, x4, x5) = (
                covariates[0][i],
                covariates[1][i],
                covariates[2][i],
                covariates[3][i],
                covariates[4][i],
            );
            (
                -0.5 + 0.5 * x1 + 1.0 * x2 + 0.5 * x3 - 1.0 * x4 + 1.0 * x5,
                1.5 - 1.5 * x1 + 4.0 * x2 - 1.5 * x3 + 3.0 * x5,
            )
        }
        Design::D => {
            let (x1, x2, x3, x4, x5) = (
                covariates[0][i],
                covariates[1][i],
                covariates[2][i],
                covariates[3][i],
                covariates[4][i],
            );
            (
                h1(x1) + 0.1 * x2 - 0.3 * x3 - 0.6 * h1(x1) * x4 - 0.1 * x5,
                h0(x1) + h0(x1) * x2 + 0.3 * x2 - 0.2 * x3 - 0.4 * x4 + 0.6 * x5,
            )
        }
    }
}

/// The L1 imbalance between two propensity-score samples: half the summed
/// absolute difference of within-group bin proportions over a common
/// equal-width histogram. Break points use the Sturges rule on the pooled
/// scores. Ranges over [0, 1]: 0 for identical histograms, 1 for disjoint
/// supports.
pub fn l1_imbalance(treated: &[f64], control: &[f64]) -> Result<f64> {
    if treated.is_empty() || control.is_empty() {
        return Err(Error::input("both treatment groups need at least one propensity score"));
    }
    for &v in treated.iter().chain(control) {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::input(format!("propensity score {v} is outside (0, 1)")));
        }
    }

    let pooled_n = treated.len() + control.len();
    let bins = ((pooled_n as f64).log2() + 1.0).ceil() as usize;
    let lo = treated.iter().chain(control).cloned().fold(f64::INFINITY, f64::min);
    let hi = treated.iter().chain(control).cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(0.0);
    }

    let mut count_t = vec![0usize; bins];
    let mut count_c = vec![0usize; bins];
    let index = |v: f64| -> usize {
        let raw = ((v - lo) / (hi - lo) * bins as f64) as usize;
        raw.min(bins - 1)
    };
    for &v in treated {
        count_t[index(v)] += 1;
    }
    for &v in control {
        count_c[index(v)] += 1;
    }

    let nt = treated.len() as f64;
    let nc = control.len() as f64;
    let mut total = 0.0;
    for b in 0..bins {
        total += (count_t[b] as f64 / nt - count_c[b] as f64 / nc).abs();
    }
    Ok(0.5 * total)
}

/// Misspecification bias of the outcome-regression estimators.
#[derive(Debug, Clone, Copy)]
pub struct ModelBias {
    pub att: f64,
    pub ate: f64,
}

/// Bias of the OR estimators attributable to outcome-model misspecification,
/// computed from the true structural functions; only available in
/// simulation, where those functions are known.
///
/// The key ingredients are the projections of the true f0 (control rows)
/// and f1 (treated rows) onto the arm design columns.
pub fn model_bias_or(generated: &GeneratedData, models: &FittedModels) -> Result<ModelBias> {
    let data = &generated.data;
    let n = data.n() as f64;

    let project = |arm_treated: bool, values: &DVector<f64>| -> DVector<f64> {
        let mask: Vec<bool> = data.z().iter().map(|&z| z == arm_treated).collect();
        let x_arm = data.design().select_rows(&mask);
        let selected = crate::estimators::select(values, &mask);
        let gram_inverse = if arm_treated {
            &models.ols1.gram_inverse
        } else {
            &models.ols0.gram_inverse
        };
        gram_inverse * (x_arm.transpose() * selected)
    };

    let beta0_star = project(false, &generated.f0);
    let beta1_star = project(true, &generated.f1);

    let mut treated_f0_sum = 0.0;
    let mut control_f1_sum = 0.0;
    let p = data.design().cols();
    let mut treated_x_sum = DVector::zeros(p);
    let mut control_x_sum = DVector::zeros(p);
    let mut n1 = 0usize;
    for i in 0..data.n() {
        let x = data.design().row(i);
        if data.z()[i] {
            treated_f0_sum += generated.f0[i];
            treated_x_sum += x;
            n1 += 1;
        } else {
            control_f1_sum += generated.f1[i];
            control_x_sum += x;
        }
    }

    let att = (treated_f0_sum - treated_x_sum.dot(&beta0_star)) / n1 as f64;
    let ate = (treated_f0_sum - treated_x_sum.dot(&beta0_star) - control_f1_sum
        + control_x_sum.dot(&beta1_star))
        / n;
    Ok(ModelBias { att, ate })
}

/// Confounding bias evaluated at the generating treatment index and the
/// unit error scales, rather than at the fitted treatment model and the
/// estimated residual scale. This is the quantity the estimators' bias
/// converges to, so replication means of it are the natural comparison
/// point for empirical bias; it is only available in simulation. The
/// fitted models contribute the realized arm regressions through their
/// Gram inverses.
pub fn oracle_confounding_bias(
    generated: &GeneratedData,
    models: &FittedModels,
    estimand: Estimand,
    estimator: EstimatorKind,
    rho0: f64,
    rho1: f64,
) -> f64 {
    use crate::dist::{inverse_mills, Arm};
    use crate::estimators::select;

    let data = &generated.data;
    let lambda0 = generated.true_index.map(|t| inverse_mills(t, Arm::Control));
    let lambda1 = generated.true_index.map(|t| inverse_mills(t, Arm::Treated));

    let projection = |arm: Arm, lambda: &DVector<f64>| -> DVector<f64> {
        let mask = data.arm_mask(arm);
        let x_arm = data.design().select_rows(&mask);
        let selected = select(lambda, &mask);
        &models.ols(arm).gram_inverse * (x_arm.transpose() * selected)
    };

    match (estimator, estimand) {
        (EstimatorKind::OutcomeRegression, Estimand::Att) => {
            let mask1 = data.arm_mask(Arm::Treated);
            let treated_lambda1 = select(&lambda1, &mask1).mean();
            let xbar1 = data.design().select_rows(&mask1).row_mean().transpose();
            rho0 * (treated_lambda1 + xbar1.dot(&projection(Arm::Control, &lambda0)))
        }
        (EstimatorKind::OutcomeRegression, Estimand::Ate) => {
            let xbar = data.design().column_means();
            rho1 * xbar.dot(&projection(Arm::Treated, &lambda1))
                + rho0 * xbar.dot(&projection(Arm::Control, &lambda0))
        }
        (EstimatorKind::DoublyRobust, Estimand::Att) => {
            rho0 * lambda0.mean() * data.n() as f64 / data.n_treated() as f64
        }
        (EstimatorKind::DoublyRobust, Estimand::Ate) => {
            rho1 * lambda1.mean() + rho0 * lambda0.mean()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_models;

    #[test]
    fn piecewise_functions_match_hand_values() {
        assert_eq!(h0(0.0), 1.5);
        assert_eq!(h1(0.0), 0.0);
        assert!((h0(2.5) - 3.5).abs() < 1e-15);
        // Branch boundaries are continuous.
        for (f, bounds) in [(h0 as fn(f64) -> f64, vec![-1.5, 1.0, 2.0]), (h1, vec![-1.0, 1.0, 3.0])] {
            for b in bounds {
                let eps = 1e-9;
                assert!((f(b - eps) - f(b + eps)).abs() < 1e-6, "discontinuity near {b}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_and_streams_differ() {
        let spec = SimulationDesign::new(Design::C, Overlap::High, 300, 0.2, 0.4).unwrap();
        let a = generate(&spec, RngSeed::new(11, 0)).unwrap();
        let b = generate(&spec, RngSeed::new(11, 0)).unwrap();
        assert_eq!(a.data.y(), b.data.y());
        assert_eq!(a.data.z(), b.data.z());
        let c = generate(&spec, RngSeed::new(11, 1)).unwrap();
        assert_ne!(a.data.y(), c.data.y());
    }

    #[test]
    fn treated_fraction_matches_the_oracle() {
        let spec = SimulationDesign::new(Design::A, Overlap::Low, 1_000_000, 0.0, 0.0).unwrap();
        let g = generate(&spec, RngSeed::new(7, 0)).unwrap();
        let share = g.data.n_treated() as f64 / g.data.n() as f64;
        assert!((share - g.truth.treated_fraction).abs() < 0.005, "share = {share}");
    }

    #[test]
    fn uncorrelated_errors_at_rho_zero() {
        let spec = SimulationDesign::new(Design::A, Overlap::Low, 1_000_000, 0.0, 0.0).unwrap();
        let g = generate(&spec, RngSeed::new(8, 0)).unwrap();
        let corr = sample_correlation(&g.eps0, &g.eta);
        assert!(corr.abs() < 0.003, "corr = {corr}");
    }

    #[test]
    fn error_correlations_match_request() {
        let spec = SimulationDesign::new(Design::B, Overlap::High, 200_000, 0.3, 0.5).unwrap();
        let g = generate(&spec, RngSeed::new(9, 0)).unwrap();
        let bound = 3.0 / (spec.n as f64).sqrt();
        assert!((sample_correlation(&g.eta, &g.eps0) - 0.3).abs() < bound);
        assert!((sample_correlation(&g.eta, &g.eps1) - 0.5).abs() < bound);
        assert!((sample_correlation(&g.eps0, &g.eps1) - 0.15).abs() < bound);
    }

    #[test]
    fn outcomes_compose_structure_and_errors() {
        let spec = SimulationDesign::new(Design::D, Overlap::Low, 500, 0.1, 0.2).unwrap();
        let g = generate(&spec, RngSeed::new(10, 0)).unwrap();
        for i in 0..g.data.n() {
            let expected = if g.data.z()[i] { g.f1[i] + g.eps1[i] } else { g.f0[i] + g.eps0[i] };
            assert_eq!(g.data.y()[i], expected);
        }
    }

    #[test]
    fn l1_is_zero_for_identical_groups_and_one_for_disjoint() {
        let scores: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(l1_imbalance(&scores, &scores).unwrap(), 0.0);

        let low: Vec<f64> = (1..50).map(|i| 0.2 + i as f64 / 1000.0).collect();
        let high: Vec<f64> = (1..50).map(|i| 0.7 + i as f64 / 1000.0).collect();
        assert_eq!(l1_imbalance(&low, &high).unwrap(), 1.0);

        assert!(l1_imbalance(&[], &scores).is_err());
        assert!(l1_imbalance(&[0.5, 1.0], &scores).is_err());
    }

    #[test]
    fn model_bias_vanishes_when_the_outcome_model_is_correct() {
        let spec = SimulationDesign::new(Design::A, Overlap::Low, 2_000, 0.0, 0.0).unwrap();
        let g = generate(&spec, RngSeed::new(12, 0)).unwrap();
        let models = fit_models(&g.data, None).unwrap();
        let bias = model_bias_or(&g, &models).unwrap();
        // The projections reproduce the linear structural functions exactly,
        // so both terms cancel to rounding error.
        assert!(bias.att.abs() < 1e-10, "att {}", bias.att);
        assert!(bias.ate.abs() < 1e-10, "ate {}", bias.ate);
    }

    #[test]
    fn model_bias_is_nonzero_under_misspecification() {
        let spec = SimulationDesign::new(Design::B, Overlap::High, 5_000, 0.0, 0.0).unwrap();
        let g = generate(&spec, RngSeed::new(13, 0)).unwrap();
        let models = fit_models(&g.data, None).unwrap();
        let bias = model_bias_or(&g, &models).unwrap();
        assert!(bias.att.abs() > 1e-3);
    }

    #[test]
    fn oracle_bias_is_linear_in_rho_and_ignores_rho1_for_att() {
        let spec = SimulationDesign::new(Design::B, Overlap::Low, 400, 0.0, 0.0).unwrap();
        let g = generate(&spec, RngSeed::new(14, 0)).unwrap();
        let models = fit_models(&g.data, None).unwrap();
        for estimator in [EstimatorKind::OutcomeRegression, EstimatorKind::DoublyRobust] {
            let att = |r0: f64, r1: f64| {
                oracle_confounding_bias(&g, &models, Estimand::Att, estimator, r0, r1)
            };
            assert_eq!(att(0.0, 0.0), 0.0);
            assert_eq!(att(0.3, 0.9), att(0.3, -0.4));
            assert!((att(0.4, 0.0) - 2.0 * att(0.2, 0.0)).abs() < 1e-14);

            let ate = |r0: f64, r1: f64| {
                oracle_confounding_bias(&g, &models, Estimand::Ate, estimator, r0, r1)
            };
            let joint = ate(0.25, -0.15);
            assert!((joint - ate(0.25, 0.0) - ate(0.0, -0.15)).abs() < 1e-14);
        }
    }

    #[test]
    fn dr_oracle_bias_matches_a_direct_average() {
        use crate::dist::{inverse_mills, Arm};
        let spec = SimulationDesign::new(Design::A, Overlap::High, 300, 0.0, 0.0).unwrap();
        let g = generate(&spec, RngSeed::new(15, 0)).unwrap();
        let models = fit_models(&g.data, None).unwrap();
        let mean0 = g.true_index.map(|t| inverse_mills(t, Arm::Control)).mean();
        let mean1 = g.true_index.map(|t| inverse_mills(t, Arm::Treated)).mean();
        let ate =
            oracle_confounding_bias(&g, &models, Estimand::Ate, EstimatorKind::DoublyRobust, 0.2, 0.5);
        assert!((ate - (0.5 * mean1 + 0.2 * mean0)).abs() < 1e-14);
        let att =
            oracle_confounding_bias(&g, &models, Estimand::Att, EstimatorKind::DoublyRobust, 0.2, 0.0);
        let share = g.data.n_treated() as f64 / g.data.n() as f64;
        assert!((att - 0.2 * mean0 / share).abs() < 1e-12);
    }

    #[test]
    fn design_validation() {
        assert!(SimulationDesign::new(Design::A, Overlap::Low, 10, 0.0, 0.0).is_err());
        assert!(SimulationDesign::new(Design::A, Overlap::Low, 100, 1.5, 0.0).is_err());
        assert!("a".parse::<Design>().is_ok());
        assert!("E".parse::<Design>().is_err());
        assert!("HIGH".parse::<Overlap>().is_ok());
    }

    fn sample_correlation(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = a.len() as f64;
        let ma = a.mean();
        let mb = b.mean();
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for i in 0..a.len() {
            cov += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        cov / n / ((va / n).sqrt() * (vb / n).sqrt())
    }
}
