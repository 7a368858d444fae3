//! Standard errors for the four estimators.
//!
//! The outcome-regression and DR-ATT estimators are M-estimators, so their
//! variances come from the usual sandwich construction: stack the
//! estimating equations, form the empirical bread A and meat B, and read
//! off the target's entry of A⁻¹B(A⁻¹)ᵀ/n. The DR-ATE estimator instead
//! uses the empirical second moment of its influence contributions.
//! Large-sample alternatives for the OR estimators are provided behind a
//! flag.

use nalgebra::{DMatrix, DVector};

use crate::dist::{inverse_mills, normal_cdf, normal_pdf, Arm};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_dr_att, estimate_dr_ate, estimate_or_att, estimate_or_ate, Dataset, EffectEstimate,
    Estimand, EstimatorKind, FittedModels, OVERLAP_TOL,
};

/// Empirical bread and meat of a sandwich variance, with the extracted
/// variance for the target parameter (the first stacked coordinate).
#[derive(Debug, Clone)]
pub struct SandwichParts {
    pub bread: DMatrix<f64>,
    pub meat: DMatrix<f64>,
    pub variance_of_target: f64,
}

impl SandwichParts {
    /// 1-norm condition estimate of the bread; infinite when singular.
    pub fn condition_estimate(&self) -> f64 {
        let norm = matrix_l1_norm(&self.bread);
        match self.bread.clone().try_inverse() {
            Some(inv) => norm * matrix_l1_norm(&inv),
            None => f64::INFINITY,
        }
    }
}

fn matrix_l1_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves Aᵀv = e₁, giving the first row of A⁻¹.
fn first_row_of_inverse(a: &DMatrix<f64>, context: &'static str) -> Result<DVector<f64>> {
    let mut e1 = DVector::zeros(a.nrows());
    e1[0] = 1.0;
    a.transpose()
        .lu()
        .solve(&e1)
        .ok_or(Error::SingularMatrix { context })
}

fn finish(bread: DMatrix<f64>, meat: DMatrix<f64>, n: usize, context: &'static str) -> Result<SandwichParts> {
    let v = first_row_of_inverse(&bread, context)?;
    let variance = v.dot(&(&meat * &v)) / n as f64;
    Ok(SandwichParts { bread, meat, variance_of_target: variance })
}

/// Sandwich variance of the outcome-regression ATT estimator.
///
/// Stacked equations over (τ¹, β⁰):
///   Ψ₁ = z (y − β⁰ᵀx − τ¹)
///   Ψ₂ = (1 − z)(y − β⁰ᵀx) x
pub fn sandwich_or_att(data: &Dataset, models: &FittedModels) -> Result<SandwichParts> {
    let n = data.n();
    let p = data.design().cols();
    let d = 1 + p;
    let tau = estimate_or_att(data, models);
    let beta0 = &models.ols0.coefficients;

    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut psi = DVector::zeros(d);
    for i in 0..n {
        let x = data.design().row(i);
        let e0 = data.y()[i] - x.dot(beta0);
        let z = data.z()[i];

        psi.fill(0.0);
        if z {
            psi[0] = e0 - tau;
            a[(0, 0)] += 1.0;
            for c in 0..p {
                a[(0, 1 + c)] += x[c];
            }
        } else {
            for r in 0..p {
                psi[1 + r] = e0 * x[r];
                for c in 0..p {
                    a[(1 + r, 1 + c)] += x[r] * x[c];
                }
            }
        }
        b.ger(1.0, &psi, &psi, 1.0);
    }
    a /= n as f64;
    b /= n as f64;
    finish(a, b, n, "OR-ATT sandwich bread")
}

/// Sandwich variance of the outcome-regression ATE estimator.
///
/// Stacked equations over (τ, β¹, β⁰):
///   Ψ₁ = (β¹ − β⁰)ᵀx − τ
///   Ψ₂ = z (y − β¹ᵀx) x
///   Ψ₃ = (1 − z)(y − β⁰ᵀx) x
pub fn sandwich_or_ate(data: &Dataset, models: &FittedModels) -> Result<SandwichParts> {
    let n = data.n();
    let p = data.design().cols();
    let d = 1 + 2 * p;
    let tau = estimate_or_ate(data, models);
    let beta1 = &models.ols1.coefficients;
    let beta0 = &models.ols0.coefficients;

    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut psi = DVector::zeros(d);
    for i in 0..n {
        let x = data.design().row(i);
        let z = data.z()[i];
        let e1 = data.y()[i] - x.dot(beta1);
        let e0 = data.y()[i] - x.dot(beta0);

        psi.fill(0.0);
        psi[0] = x.dot(beta1) - x.dot(beta0) - tau;
        a[(0, 0)] += 1.0;
        for c in 0..p {
            a[(0, 1 + c)] -= x[c];
            a[(0, 1 + p + c)] += x[c];
        }
        if z {
            for r in 0..p {
                psi[1 + r] = e1 * x[r];
                for c in 0..p {
                    a[(1 + r, 1 + c)] += x[r] * x[c];
                }
            }
        } else {
            for r in 0..p {
                psi[1 + p + r] = e0 * x[r];
                for c in 0..p {
                    a[(1 + p + r, 1 + p + c)] += x[r] * x[c];
                }
            }
        }
        b.ger(1.0, &psi, &psi, 1.0);
    }
    a /= n as f64;
    b /= n as f64;
    finish(a, b, n, "OR-ATE sandwich bread")
}

/// Sandwich variance of the doubly robust ATT estimator.
///
/// Stacked equations over (τ¹, β⁰, γ):
///   Ψ₁ = z (y − β⁰ᵀx) − (1 − z)(y − β⁰ᵀx) / (1 − Φ(g)) − z τ¹
///   Ψ₂ = (1 − z)(y − β⁰ᵀx) x
///   Ψ₃ = (z λ₁(g) − (1 − z) λ₀(g)) x̃
/// with g = γᵀx̃. The probit block of the bread uses the analytic score
/// derivative: −dΨ₃/dγ = (z λ₁(λ₁ + g) + (1 − z) λ₀(λ₀ − g)) x̃x̃ᵀ.
pub fn sandwich_dr_att(data: &Dataset, models: &FittedModels) -> Result<SandwichParts> {
    let n = data.n();
    let p = data.design().cols();
    let probit = models.probit()?;
    let xt = models.treatment_design(data);
    let q = xt.cols();
    let d = 1 + p + q;
    let tau = estimate_dr_att(data, models)?;
    let beta0 = &models.ols0.coefficients;

    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut psi = DVector::zeros(d);
    for i in 0..n {
        let x = data.design().row(i);
        let xti = xt.row(i);
        let z = data.z()[i];
        let e0 = data.y()[i] - x.dot(beta0);
        let g = probit.linear_index[i];

        psi.fill(0.0);
        let info_weight;
        if z {
            psi[0] = e0 - tau;
            a[(0, 0)] += 1.0;
            for c in 0..p {
                a[(0, 1 + c)] += x[c];
            }
            let lambda1 = inverse_mills(g, Arm::Treated);
            for r in 0..q {
                psi[1 + p + r] = lambda1 * xti[r];
            }
            info_weight = lambda1 * (lambda1 + g);
        } else {
            let tail = normal_cdf(-g);
            if tail <= OVERLAP_TOL {
                return Err(Error::NoOverlap { row: i, propensity: 1.0 - tail, arm: 0 });
            }
            psi[0] = -e0 / tail;
            let lambda0 = inverse_mills(g, Arm::Control);
            for r in 0..p {
                psi[1 + r] = e0 * x[r];
                for c in 0..p {
                    a[(1 + r, 1 + c)] += x[r] * x[c];
                }
            }
            for c in 0..p {
                a[(0, 1 + c)] -= x[c] / tail;
            }
            let dgamma = e0 * normal_pdf(g) / (tail * tail);
            for c in 0..q {
                a[(0, 1 + p + c)] += dgamma * xti[c];
                psi[1 + p + c] = -lambda0 * xti[c];
            }
            info_weight = lambda0 * (lambda0 - g);
        }
        for r in 0..q {
            for c in 0..q {
                a[(1 + p + r, 1 + p + c)] += info_weight * xti[r] * xti[c];
            }
        }
        b.ger(1.0, &psi, &psi, 1.0);
    }
    a /= n as f64;
    b /= n as f64;
    finish(a, b, n, "DR-ATT sandwich bread")
}

/// Influence-function variance of the doubly robust ATE estimator:
/// n⁻² Σ Îᵢ² with Îᵢ the augmented inverse-weighted contribution minus τ̂.
pub fn var_dr_ate(data: &Dataset, models: &FittedModels) -> Result<f64> {
    let probit = models.probit()?;
    let tau = estimate_dr_ate(data, models)?;
    let beta1 = &models.ols1.coefficients;
    let beta0 = &models.ols0.coefficients;
    let n = data.n();

    let mut total = 0.0;
    for i in 0..n {
        let x = data.design().row(i);
        let fitted1 = x.dot(beta1);
        let fitted0 = x.dot(beta0);
        let g = probit.linear_index[i];
        let correction = if data.z()[i] {
            let p = probit.propensity[i];
            if p <= OVERLAP_TOL {
                return Err(Error::NoOverlap { row: i, propensity: p, arm: 1 });
            }
            (data.y()[i] - fitted1) / p
        } else {
            let tail = normal_cdf(-g);
            if tail <= OVERLAP_TOL {
                return Err(Error::NoOverlap { row: i, propensity: 1.0 - tail, arm: 0 });
            }
            -(data.y()[i] - fitted0) / tail
        };
        let influence = fitted1 - fitted0 + correction - tau;
        total += influence * influence;
    }
    Ok(total / (n as f64 * n as f64))
}

/// Large-sample variance of the OR-ATT estimator:
/// n₁⁻¹ (2 σ̂₁² + (β̂¹ − β̂⁰)ᵀ Côv(x | z = 1) (β̂¹ − β̂⁰))
/// with σ̂₁² the treated-arm residual variance on n₁ − 1 degrees of freedom.
pub fn large_sample_var_or_att(data: &Dataset, models: &FittedModels) -> Result<f64> {
    let mask = data.arm_mask(Arm::Treated);
    let n1 = data.n_treated();
    let sigma1 = arm_residual_variance(data, models, Arm::Treated);
    let delta = &models.ols1.coefficients - &models.ols0.coefficients;
    let cov = masked_covariance(data, &mask)?;
    Ok((2.0 * sigma1 + delta.dot(&(&cov * &delta))) / n1 as f64)
}

/// Large-sample variance of the OR-ATE estimator:
/// n⁻² 1ᵀX (σ̂₁²(X₁ᵀX₁)⁻¹ + σ̂₀²(X₀ᵀX₀)⁻¹) Xᵀ1
///   + n⁻¹ (β̂¹ − β̂⁰)ᵀ Côv(x) (β̂¹ − β̂⁰)
pub fn large_sample_var_or_ate(data: &Dataset, models: &FittedModels) -> Result<f64> {
    let n = data.n() as f64;
    let sums = data.design().column_sums();
    let sigma1 = arm_residual_variance(data, models, Arm::Treated);
    let sigma0 = arm_residual_variance(data, models, Arm::Control);
    let mixed = &models.ols1.gram_inverse * sigma1 + &models.ols0.gram_inverse * sigma0;
    let first = sums.dot(&(&mixed * &sums)) / (n * n);

    let delta = &models.ols1.coefficients - &models.ols0.coefficients;
    let all = vec![true; data.n()];
    let cov = masked_covariance(data, &all)?;
    Ok(first + delta.dot(&(&cov * &delta)) / n)
}

/// Residual variance of one arm on m − 1 degrees of freedom, as the
/// large-sample displays use, rather than the OLS divisor m − p.
fn arm_residual_variance(data: &Dataset, models: &FittedModels, arm: Arm) -> f64 {
    let beta = &models.ols(arm).coefficients;
    let mask = data.arm_mask(arm);
    let mut total = 0.0;
    let mut m = 0usize;
    for i in 0..data.n() {
        if mask[i] {
            let e = data.y()[i] - data.design().row(i).dot(beta);
            total += e * e;
            m += 1;
        }
    }
    total / (m - 1) as f64
}

/// Sample covariance of the design rows selected by the mask. The intercept
/// column contributes zero, so quadratic forms in coefficient differences
/// see only the covariates.
fn masked_covariance(data: &Dataset, mask: &[bool]) -> Result<DMatrix<f64>> {
    let m = mask.iter().filter(|&&k| k).count();
    if m < 2 {
        return Err(Error::invalid_argument("covariance needs at least 2 rows"));
    }
    let p = data.design().cols();
    let mut mean = DVector::zeros(p);
    for i in 0..data.n() {
        if mask[i] {
            mean += data.design().row(i);
        }
    }
    mean /= m as f64;
    let mut cov = DMatrix::zeros(p, p);
    for i in 0..data.n() {
        if mask[i] {
            let centered = data.design().row(i) - &mean;
            cov.ger(1.0, &centered, &centered, 1.0);
        }
    }
    cov /= (m - 1) as f64;
    Ok(cov)
}

/// Convenience wrappers returning just the variance.
pub fn sandwich_var_or_att(data: &Dataset, models: &FittedModels) -> Result<f64> {
    Ok(sandwich_or_att(data, models)?.variance_of_target)
}

pub fn sandwich_var_or_ate(data: &Dataset, models: &FittedModels) -> Result<f64> {
    Ok(sandwich_or_ate(data, models)?.variance_of_target)
}

pub fn sandwich_var_dr_att(data: &Dataset, models: &FittedModels) -> Result<f64> {
    Ok(sandwich_dr_att(data, models)?.variance_of_target)
}

/// The recommended variance for the requested estimator, or the
/// large-sample OR alternative when the flag is set.
pub fn variance(
    data: &Dataset,
    models: &FittedModels,
    estimand: Estimand,
    estimator: EstimatorKind,
    large_sample: bool,
) -> Result<f64> {
    if large_sample && estimator == EstimatorKind::DoublyRobust {
        return Err(Error::invalid_argument(
            "the large-sample variance is only available for the outcome-regression estimators",
        ));
    }
    match (estimator, estimand, large_sample) {
        (EstimatorKind::OutcomeRegression, Estimand::Att, false) => sandwich_var_or_att(data, models),
        (EstimatorKind::OutcomeRegression, Estimand::Ate, false) => sandwich_var_or_ate(data, models),
        (EstimatorKind::OutcomeRegression, Estimand::Att, true) => large_sample_var_or_att(data, models),
        (EstimatorKind::OutcomeRegression, Estimand::Ate, true) => large_sample_var_or_ate(data, models),
        (EstimatorKind::DoublyRobust, Estimand::Att, _) => sandwich_var_dr_att(data, models),
        (EstimatorKind::DoublyRobust, Estimand::Ate, _) => var_dr_ate(data, models),
    }
}

/// Point estimate plus standard error for the requested pair.
pub fn effect_estimate(
    data: &Dataset,
    models: &FittedModels,
    estimand: Estimand,
    estimator: EstimatorKind,
    large_sample: bool,
) -> Result<EffectEstimate> {
    let value = match (estimator, estimand) {
        (EstimatorKind::OutcomeRegression, Estimand::Att) => estimate_or_att(data, models),
        (EstimatorKind::OutcomeRegression, Estimand::Ate) => estimate_or_ate(data, models),
        (EstimatorKind::DoublyRobust, Estimand::Att) => estimate_dr_att(data, models)?,
        (EstimatorKind::DoublyRobust, Estimand::Ate) => estimate_dr_ate(data, models)?,
    };
    let var = variance(data, models, estimand, estimator, large_sample)?;
    Ok(EffectEstimate { estimand, estimator, value, std_error: var.sqrt() })
}
