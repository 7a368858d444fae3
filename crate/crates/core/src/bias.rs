//! Confounding-bias plug-ins for the four estimators and the
//! rho-corrected residual scale they share.
//!
//! Under the probit selection model, each estimator's confounding bias is
//! additively separable over the two error correlations: it has the form
//! rho0 sigma0 K0 + rho1 sigma1 K1 where the K constants depend only on the
//! fitted models and the data. This module computes the K constants, the
//! corrected scale estimates sigma_j(rho), and their products on demand.

use crate::dist::{inverse_mills, Arm};
use crate::error::{Error, Result};
use crate::estimators::{Dataset, Estimand, EstimatorKind, FittedModels};
use nalgebra::DVector;

/// Corrected residual scale for one arm under an assumed error correlation.
///
/// The ordinary OLS residual variance from arm j is attenuated by selection
/// when rho_j is nonzero; the correction divides it by
/// 1 + (rho² / (n_j − p)) (±gᵀλ − λᵀX(XᵀX)⁻¹Xᵀλ), with the plus sign on the
/// control arm and the minus sign on the treated arm, and λ and g evaluated
/// on the arm's rows. At rho = 0 this returns the OLS scale exactly.
pub fn sigma_corrected(data: &Dataset, models: &FittedModels, arm: Arm, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid_argument(format!("correlation {rho} is outside [-1, 1]")));
    }
    let curvature = sigma_curvature(data, models, arm)?;
    scale_at(models.ols(arm).residual_variance, curvature, rho, arm)
}

/// The per-arm coefficient c_j such that sigma_j(rho)² = s²_OLS / (1 + c_j rho²).
pub(crate) fn sigma_curvature(data: &Dataset, models: &FittedModels, arm: Arm) -> Result<f64> {
    let probit = models.probit()?;
    let ols = models.ols(arm);
    let mask = data.arm_mask(arm);

    let mut g_dot_lambda = 0.0;
    let mut lambda = Vec::with_capacity(ols.rows);
    for i in 0..data.n() {
        if mask[i] {
            let g = probit.linear_index[i];
            let l = inverse_mills(g, arm);
            g_dot_lambda += g * l;
            lambda.push(l);
        }
    }
    let lambda = DVector::from_vec(lambda);
    let x_arm = data.design().select_rows(&mask);
    let xtl = x_arm.transpose() * &lambda;
    let projected = xtl.dot(&(&ols.gram_inverse * &xtl));

    let df = ols.residual_df();
    if df == 0 {
        return Err(Error::invalid_argument("saturated outcome model leaves no residual degrees of freedom"));
    }
    Ok((arm.sign() * g_dot_lambda - projected) / df as f64)
}

fn scale_at(ols_variance: f64, curvature: f64, rho: f64, arm: Arm) -> Result<f64> {
    let denominator = 1.0 + rho * rho * curvature;
    if denominator <= 0.0 {
        return Err(Error::InfeasibleRho { rho, arm: arm.index(), denominator });
    }
    Ok((ols_variance / denominator).sqrt())
}

/// Precomputed bias structure: evaluating the bias at any (rho0, rho1) is
/// O(1) once this is built, which keeps grid scans cheap.
#[derive(Debug, Clone)]
pub struct BiasModel {
    pub estimand: Estimand,
    pub estimator: EstimatorKind,
    multiplier: [f64; 2],
    curvature: [f64; 2],
    ols_variance: [f64; 2],
}

impl BiasModel {
    pub fn new(
        data: &Dataset,
        models: &FittedModels,
        estimand: Estimand,
        estimator: EstimatorKind,
    ) -> Result<Self> {
        let probit = models.probit()?;
        let n = data.n() as f64;
        let n1 = data.n_treated() as f64;

        let multiplier = match (estimator, estimand) {
            (EstimatorKind::OutcomeRegression, Estimand::Att) => {
                // Treated-sample mean of λ₁ plus the control projection of λ₀
                // evaluated at the treated covariate mean.
                let mut lambda1_sum = 0.0;
                for i in 0..data.n() {
                    if data.z()[i] {
                        lambda1_sum += inverse_mills(probit.linear_index[i], Arm::Treated);
                    }
                }
                let a0 = mills_projection(data, models, Arm::Control);
                let mask1 = data.arm_mask(Arm::Treated);
                let x1_mean = data.design().select_rows(&mask1).row_mean().transpose();
                [lambda1_sum / n1 + a0.dot(&x1_mean), 0.0]
            }
            (EstimatorKind::OutcomeRegression, Estimand::Ate) => {
                let x_mean = data.design().column_means();
                let a0 = mills_projection(data, models, Arm::Control);
                let a1 = mills_projection(data, models, Arm::Treated);
                [x_mean.dot(&a0), x_mean.dot(&a1)]
            }
            (EstimatorKind::DoublyRobust, Estimand::Att) => {
                let mut lambda0_sum = 0.0;
                for i in 0..data.n() {
                    lambda0_sum += inverse_mills(probit.linear_index[i], Arm::Control);
                }
                [lambda0_sum / n1, 0.0]
            }
            (EstimatorKind::DoublyRobust, Estimand::Ate) => {
                let mut sums = [0.0, 0.0];
                for i in 0..data.n() {
                    let g = probit.linear_index[i];
                    sums[0] += inverse_mills(g, Arm::Control);
                    sums[1] += inverse_mills(g, Arm::Treated);
                }
                [sums[0] / n, sums[1] / n]
            }
        };

        // The corrected scale is only needed on arms whose multiplier is
        // nonzero; for the ATT estimands the treated-arm term is identically
        // zero and rho1 never enters.
        let mut curvature = [0.0, 0.0];
        for arm in [Arm::Control, Arm::Treated] {
            let j = arm.index() as usize;
            if multiplier[j] != 0.0 {
                curvature[j] = sigma_curvature(data, models, arm)?;
            }
        }

        Ok(BiasModel {
            estimand,
            estimator,
            multiplier,
            curvature,
            ols_variance: [models.ols0.residual_variance, models.ols1.residual_variance],
        })
    }

    /// sigma_j(rho) from the precomputed curvature.
    pub fn sigma(&self, arm: Arm, rho: f64) -> Result<f64> {
        let j = arm.index() as usize;
        scale_at(self.ols_variance[j], self.curvature[j], rho, arm)
    }

    /// The arm-j bias contribution rho · sigma_j(rho) · K_j.
    pub fn term(&self, arm: Arm, rho: f64) -> Result<f64> {
        let j = arm.index() as usize;
        if self.multiplier[j] == 0.0 || rho == 0.0 {
            return Ok(0.0);
        }
        Ok(rho * self.sigma(arm, rho)? * self.multiplier[j])
    }

    /// Total confounding bias at the given correlations.
    pub fn bias(&self, rho0: f64, rho1: f64) -> Result<f64> {
        Ok(self.term(Arm::Control, rho0)? + self.term(Arm::Treated, rho1)?)
    }

    /// Largest |rho| for which every arm entering the bias stays feasible;
    /// infinite when no arm constrains it.
    pub fn feasible_rho_limit(&self) -> f64 {
        let mut limit = f64::INFINITY;
        for j in 0..2 {
            if self.multiplier[j] != 0.0 && self.curvature[j] < 0.0 {
                limit = limit.min(1.0 / (-self.curvature[j]).sqrt());
            }
        }
        limit
    }
}

/// The realized vector (X_jᵀX_j)⁻¹X_jᵀλ_j over arm-j rows.
fn mills_projection(data: &Dataset, models: &FittedModels, arm: Arm) -> DVector<f64> {
    let probit = models.probit.as_ref().expect("checked by caller");
    let mask = data.arm_mask(arm);
    let lambda = DVector::from_iterator(
        mask.iter().filter(|&&k| k).count(),
        (0..data.n())
            .filter(|&i| mask[i])
            .map(|i| inverse_mills(probit.linear_index[i], arm)),
    );
    let x_arm = data.design().select_rows(&mask);
    &models.ols(arm).gram_inverse * (x_arm.transpose() * lambda)
}

/// Confounding bias of the outcome-regression ATT estimator.
pub fn bias_or_att(data: &Dataset, models: &FittedModels, rho0: f64) -> Result<f64> {
    BiasModel::new(data, models, Estimand::Att, EstimatorKind::OutcomeRegression)?.bias(rho0, 0.0)
}

/// Confounding bias of the outcome-regression ATE estimator.
pub fn bias_or_ate(data: &Dataset, models: &FittedModels, rho0: f64, rho1: f64) -> Result<f64> {
    BiasModel::new(data, models, Estimand::Ate, EstimatorKind::OutcomeRegression)?.bias(rho0, rho1)
}

/// Confounding bias of the doubly robust ATT estimator.
pub fn bias_dr_att(data: &Dataset, models: &FittedModels, rho0: f64) -> Result<f64> {
    BiasModel::new(data, models, Estimand::Att, EstimatorKind::DoublyRobust)?.bias(rho0, 0.0)
}

/// Confounding bias of the doubly robust ATE estimator.
pub fn bias_dr_ate(data: &Dataset, models: &FittedModels, rho0: f64, rho1: f64) -> Result<f64> {
    BiasModel::new(data, models, Estimand::Ate, EstimatorKind::DoublyRobust)?.bias(rho0, rho1)
}

/// Bias of whichever estimator/estimand pair is requested.
pub fn confounding_bias(
    data: &Dataset,
    models: &FittedModels,
    estimand: Estimand,
    estimator: EstimatorKind,
    rho0: f64,
    rho1: f64,
) -> Result<f64> {
    BiasModel::new(data, models, estimand, estimator)?.bias(rho0, rho1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignMatrix;
    use crate::estimators::tests::toy_dataset;
    use crate::estimators::fit_models;
    use crate::ols::OlsFit;
    use crate::probit::ProbitFit;
    use nalgebra::DMatrix;

    fn fitted(seed: u64, n: usize) -> (Dataset, FittedModels) {
        let data = toy_dataset(seed, n);
        let models = fit_models(&data, None).unwrap();
        (data, models)
    }

    #[test]
    fn zero_rho_returns_ols_scale_exactly() {
        let (data, models) = fitted(11, 200);
        for arm in [Arm::Control, Arm::Treated] {
            let s = sigma_corrected(&data, &models, arm, 0.0).unwrap();
            assert_eq!(s, models.ols(arm).residual_variance.sqrt());
        }
    }

    #[test]
    fn scale_is_even_in_rho() {
        let (data, models) = fitted(12, 200);
        for rho in [0.1, 0.35, 0.6] {
            let plus = sigma_corrected(&data, &models, Arm::Control, rho).unwrap();
            let minus = sigma_corrected(&data, &models, Arm::Control, -rho).unwrap();
            assert_eq!(plus, minus);
        }
    }

    #[test]
    fn all_biases_vanish_at_zero() {
        let (data, models) = fitted(13, 250);
        assert_eq!(bias_or_att(&data, &models, 0.0).unwrap(), 0.0);
        assert_eq!(bias_or_ate(&data, &models, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(bias_dr_att(&data, &models, 0.0).unwrap(), 0.0);
        assert_eq!(bias_dr_ate(&data, &models, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bias_is_odd_in_rho_for_att() {
        let (data, models) = fitted(14, 250);
        let plus = bias_dr_att(&data, &models, 0.4).unwrap();
        let minus = bias_dr_att(&data, &models, -0.4).unwrap();
        assert!((plus + minus).abs() < 1e-14);
        assert!(plus != 0.0);
    }

    #[test]
    fn ate_bias_is_additive_across_arms() {
        let (data, models) = fitted(15, 250);
        let joint = bias_or_ate(&data, &models, 0.3, -0.2).unwrap();
        let first = bias_or_ate(&data, &models, 0.3, 0.0).unwrap();
        let second = bias_or_ate(&data, &models, 0.0, -0.2).unwrap();
        assert!((joint - first - second).abs() < 1e-14);
    }

    #[test]
    fn dr_att_multiplier_matches_hand_computation() {
        // Flat probit (g = 0 everywhere) and half the sample treated: the
        // DR-ATT bias constant is λ₀(0) / (n1/n) = 2 λ₀(0).
        let n = 8;
        let xs = vec![0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8];
        let z = vec![true, false, true, false, true, false, true, false];
        let design = DesignMatrix::from_covariates(n, &[xs]).unwrap();
        let y = vec![0.0; n];
        let data = Dataset::new(y, z, design).unwrap();
        let models = FittedModels {
            ols0: OlsFit {
                coefficients: DVector::zeros(2),
                residual_variance: 1.0,
                gram_inverse: DMatrix::identity(2, 2),
                rows: 4,
                fitted_group: Some(Arm::Control),
            },
            ols1: OlsFit {
                coefficients: DVector::zeros(2),
                residual_variance: 1.0,
                gram_inverse: DMatrix::identity(2, 2),
                rows: 4,
                fitted_group: Some(Arm::Treated),
            },
            probit: Some(ProbitFit {
                gamma: DVector::zeros(2),
                linear_index: DVector::zeros(n),
                propensity: DVector::from_element(n, 0.5),
                converged: true,
                iterations: 0,
                separation: false,
            }),
            treatment_design: None,
        };
        let model = BiasModel::new(&data, &models, Estimand::Att, EstimatorKind::DoublyRobust).unwrap();
        let lambda0_at_zero = inverse_mills(0.0, Arm::Control);
        assert!((model.multiplier[0] - 2.0 * lambda0_at_zero).abs() < 1e-12);
        assert_eq!(model.multiplier[1], 0.0);
    }

    #[test]
    fn dr_ate_bias_is_symmetric_under_flat_probit() {
        // With g = 0 everywhere, λ₀(0) = λ₁(0); equal OLS scales and equal
        // arm sizes then give equal curvatures, so the DR-ATE bias is
        // symmetric in (rho0, rho1).
        let n = 40;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 / 7.0).sin()).collect();
        let z: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.3 * xs[i] + 0.1 * ((i % 5) as f64)).collect();
        let design = DesignMatrix::from_covariates(n, &[xs]).unwrap();
        let data = Dataset::new(y, z, design).unwrap();
        let models = {
            let mut m = fit_models(&data, None).unwrap();
            if let Some(p) = m.probit.as_mut() {
                p.gamma = DVector::zeros(2);
                p.linear_index = DVector::zeros(n);
                p.propensity = DVector::from_element(n, 0.5);
            }
            m.ols0.residual_variance = 1.0;
            m.ols1.residual_variance = 1.0;
            m
        };
        let model = BiasModel::new(&data, &models, Estimand::Ate, EstimatorKind::DoublyRobust).unwrap();
        let ab = model.bias(0.25, -0.4).unwrap();
        let ba = model.bias(-0.4, 0.25).unwrap();
        assert!((ab - ba).abs() < 1e-12, "{ab} vs {ba}");
    }

    #[test]
    fn infeasible_rho_is_a_hard_error() {
        // An intercept-only outcome design with a constant positive index:
        // the projection captures λ exactly, and with g = 2 on every row the
        // curvature is 5 (2 λ₀(2) − λ₀(2)²) / 4 ≈ -1.107, so |rho| near 1
        // drives the corrected variance negative.
        let n = 12;
        let z: Vec<bool> = (0..n).map(|i| i >= 5).collect();
        let intercept_only = DesignMatrix::from_covariates(n, &[]).unwrap();
        let y = vec![0.3, -0.1, 0.2, 0.0, 0.1, -0.2, 0.15, 0.05, -0.05, 0.1, 0.0, 0.2];
        let data = Dataset::new(y, z, intercept_only).unwrap();
        let mut models = fit_models(&data, None).unwrap();
        if let Some(p) = models.probit.as_mut() {
            p.linear_index = DVector::from_element(n, 2.0);
        }
        match sigma_corrected(&data, &models, Arm::Control, 0.99) {
            Err(Error::InfeasibleRho { arm: 0, .. }) => {}
            other => panic!("expected infeasible rho, got {other:?}"),
        }
        // Small rho on the same data is fine.
        assert!(sigma_corrected(&data, &models, Arm::Control, 0.2).is_ok());
    }

    #[test]
    fn rho_outside_unit_interval_is_rejected() {
        let (data, models) = fitted(17, 150);
        assert!(sigma_corrected(&data, &models, Arm::Control, 1.2).is_err());
    }
}
