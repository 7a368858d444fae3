//! Probit regression by Newton-Raphson.

use nalgebra::{DMatrix, DVector};

use crate::design::DesignMatrix;
use crate::dist::{inverse_mills, normal_cdf, Arm};
use crate::error::{Error, Result};

/// Convergence threshold on the max-norm of the score vector.
const SCORE_TOL: f64 = 1e-8;

/// Score floor below which a stalled iteration still counts as converged.
const STALL_SCORE_TOL: f64 = 1e-5;

/// Iteration cap.
const MAX_ITERATIONS: usize = 100;

/// Coefficient magnitude past which the fit is treated as separated.
const SEPARATION_BOUND: f64 = 1e3;

/// Smallest |linear index| that counts as an extreme classification when
/// checking for quasi-complete separation; Phi(5) is within 3e-7 of 1.
const SEPARATION_INDEX: f64 = 5.0;

/// A fitted probit treatment model, Pr(z = 1 | x) = Phi(gamma' x).
#[derive(Debug, Clone)]
pub struct ProbitFit {
    /// Maximum-likelihood coefficients gamma.
    pub gamma: DVector<f64>,
    /// Per-row linear index g(x_i; gamma).
    pub linear_index: DVector<f64>,
    /// Per-row propensity Phi(g(x_i; gamma)).
    pub propensity: DVector<f64>,
    /// Whether the score reached the convergence threshold.
    pub converged: bool,
    /// Newton iterations performed.
    pub iterations: usize,
    /// Set when the coefficients diverged, indicating quasi-complete separation.
    pub separation: bool,
}

/// Fits a probit model of z on X by Newton-Raphson with the analytic
/// gradient and Hessian.
///
/// The log-likelihood is globally concave, so plain Newton steps from zero
/// converge whenever the MLE exists. If the coefficients diverge past 1e3
/// the data are quasi-completely separated and the fit is returned with
/// `converged = false` and `separation = true` rather than as a hard error.
pub fn fit_probit(x: &DesignMatrix, z: &[bool]) -> Result<ProbitFit> {
    let (rows, cols) = (x.rows(), x.cols());
    if z.len() != rows {
        return Err(Error::invalid_argument(format!(
            "treatment has {} entries but the design has {rows} rows",
            z.len()
        )));
    }
    let ones = z.iter().filter(|&&zi| zi).count();
    if ones == 0 || ones == rows {
        return Err(Error::DegenerateTreatment {
            n: rows,
            value: if ones == 0 { 0 } else { 1 },
        });
    }

    let xm = x.values();
    let mut gamma = DVector::zeros(cols);
    let mut iterations = 0;
    let mut converged = false;
    let mut separation = false;
    let mut previous_score = f64::INFINITY;
    let mut stall_count = 0;

    while iterations < MAX_ITERATIONS {
        let g = xm * &gamma;
        // Score contributions: z lambda_1(g) - (1 - z) lambda_0(g); Newton
        // weights are the corresponding Mills derivatives, both positive.
        let mut score_scale = DVector::zeros(rows);
        let mut weights = DVector::zeros(rows);
        for i in 0..rows {
            let gi = g[i];
            if z[i] {
                let l1 = inverse_mills(gi, Arm::Treated);
                score_scale[i] = l1;
                weights[i] = l1 * (l1 + gi);
            } else {
                let l0 = inverse_mills(gi, Arm::Control);
                score_scale[i] = -l0;
                weights[i] = l0 * (l0 - gi);
            }
        }
        let score = xm.transpose() * &score_scale;
        let score_inf = score.amax();

        if score_inf <= SCORE_TOL {
            converged = true;
            break;
        }
        if score_inf >= 0.99 * previous_score {
            stall_count += 1;
            if stall_count >= 3 && score_inf <= STALL_SCORE_TOL {
                converged = true;
                break;
            }
        } else {
            stall_count = 0;
        }
        previous_score = score_inf;

        let mut hessian = DMatrix::zeros(cols, cols);
        for i in 0..rows {
            let xi = xm.row(i);
            hessian.syger(weights[i], &xi.transpose(), &xi.transpose(), 1.0);
        }
        hessian.fill_upper_triangle_with_lower_triangle();
        let chol = hessian
            .cholesky()
            .ok_or(Error::SingularMatrix { context: "probit Hessian" })?;
        gamma += chol.solve(&score);
        iterations += 1;

        if gamma.amax() > SEPARATION_BOUND {
            separation = true;
            break;
        }
    }

    let linear_index = xm * &gamma;
    // With separated data the score also vanishes as gamma grows, because
    // every inverse Mills factor underflows; a "converged" fit that
    // classifies every row correctly with extreme indices is therefore a
    // separation, not an interior optimum.
    if converged {
        let classified = (0..rows).all(|i| (linear_index[i] > 0.0) == z[i]);
        let weakest = linear_index.iter().fold(f64::INFINITY, |m, &g| m.min(g.abs()));
        if classified && weakest > SEPARATION_INDEX {
            separation = true;
        }
    }
    if separation {
        converged = false;
    }
    let propensity = linear_index.map(normal_cdf);
    Ok(ProbitFit {
        gamma,
        linear_index,
        propensity,
        converged,
        iterations,
        separation,
    })
}
