//! Ordinary least squares via QR decomposition.

use nalgebra::{DMatrix, DVector};

use crate::design::DesignMatrix;
use crate::dist::Arm;
use crate::error::{Error, Result};

/// A fitted least-squares regression.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Coefficient vector, one entry per design column.
    pub coefficients: DVector<f64>,
    /// Residual variance with divisor n - (p + 1); zero for saturated fits.
    pub residual_variance: f64,
    /// (X'X)^-1, materialized because the bias formulas need it.
    pub gram_inverse: DMatrix<f64>,
    /// Number of rows the fit used.
    pub rows: usize,
    /// Which treatment arm the rows came from, when fit per arm.
    pub fitted_group: Option<Arm>,
}

impl OlsFit {
    /// Number of coefficients, i.e. design columns.
    pub fn cols(&self) -> usize {
        self.coefficients.len()
    }

    /// Residual degrees of freedom, n - (p + 1).
    pub fn residual_df(&self) -> usize {
        self.rows - self.cols()
    }
}

/// Fits y on X by least squares.
///
/// The system is solved through the QR decomposition rather than the normal
/// equations; (X'X)^-1 is still materialized from the R factor since the
/// confounding-bias plug-ins need it. A numerically rank-deficient design is
/// reported with the offending pivot column.
pub fn fit_ols(x: &DesignMatrix, y: &DVector<f64>) -> Result<OlsFit> {
    let (rows, cols) = (x.rows(), x.cols());
    if y.len() != rows {
        return Err(Error::invalid_argument(format!(
            "outcome has {} entries but the design has {rows} rows",
            y.len()
        )));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid_argument("outcome contains non-finite values"));
    }

    let qr = x.values().clone().qr();
    let r = qr.r();
    let pivot_tol = f64::EPSILON * rows as f64 * r.diagonal().amax();
    for j in 0..cols {
        let pivot = r[(j, j)].abs();
        if pivot <= pivot_tol {
            return Err(Error::RankDeficient { column: j, pivot });
        }
    }

    let qty = qr.q().transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularMatrix { context: "OLS triangular solve" })?;

    let r_inverse = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or(Error::SingularMatrix { context: "OLS gram inverse" })?;
    let mut gram_inverse = &r_inverse * r_inverse.transpose();
    // Symmetrize away the last bits of rounding.
    gram_inverse = (&gram_inverse + gram_inverse.transpose()) * 0.5;

    let residuals = y - x.values() * &coefficients;
    let residual_variance = if rows > cols {
        residuals.norm_squared() / (rows - cols) as f64
    } else {
        0.0
    };

    Ok(OlsFit {
        coefficients,
        residual_variance,
        gram_inverse,
        rows,
        fitted_group: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn design(rows: usize, covariates: &[Vec<f64>]) -> DesignMatrix {
        DesignMatrix::from_covariates(rows, covariates).unwrap()
    }

    #[test]
    fn intercept_only_mean_and_variance() {
        let x = design(2, &[]);
        let y = DVector::from_vec(vec![1.0, 3.0]);
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.residual_variance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn saturated_fit_interpolates() {
        let x = design(2, &[vec![0.0, 1.0]]);
        let y = DVector::from_vec(vec![1.0, 4.0]);
        let fit = fit_ols(&x, &y).unwrap();
        let fitted = x.values() * &fit.coefficients;
        assert!((fitted - y).amax() < 1e-10);
        assert_eq!(fit.residual_variance, 0.0);
    }

    #[test]
    fn rank_deficient_design_names_the_pivot() {
        // Third column is twice the second.
        let x = DesignMatrix::new(DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 1.0, 2.0, //
                1.0, 2.0, 4.0, //
                1.0, 3.0, 6.0, //
                1.0, 4.0, 8.0,
            ],
        ))
        .unwrap();
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        match fit_ols(&x, &y) {
            Err(Error::RankDeficient { column, .. }) => assert_eq!(column, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200;
        let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
        let x = design(n, &[x1.clone(), x2.clone()]);
        let y = DVector::from_iterator(
            n,
            (0..n).map(|i| 0.5 + 0.25 * x1[i] - x2[i] + rng.gen_range(-0.5..0.5)),
        );
        let fit = fit_ols(&x, &y).unwrap();
        let residuals = &y - x.values() * &fit.coefficients;
        let gradient = x.values().transpose() * residuals;
        assert!(gradient.amax() <= 1e-8 * y.norm());
    }

    /// An independent textbook QR solver, kept deliberately separate from the
    /// implementation under test: classical Gram-Schmidt with re-orthogonalization.
    fn gram_schmidt_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        let (_, cols) = x.shape();
        let mut q = x.clone();
        let mut r = DMatrix::zeros(cols, cols);
        for j in 0..cols {
            let mut v = q.column(j).into_owned();
            for _ in 0..2 {
                for k in 0..j {
                    let proj = q.column(k).dot(&v);
                    r[(k, j)] += proj;
                    v -= q.column(k) * proj;
                }
            }
            r[(j, j)] = v.norm();
            v /= r[(j, j)];
            q.set_column(j, &v);
        }
        let qty = q.transpose() * y;
        let mut beta = DVector::zeros(cols);
        for j in (0..cols).rev() {
            let mut s = qty[j];
            for k in j + 1..cols {
                s -= r[(j, k)] * beta[k];
            }
            beta[j] = s / r[(j, j)];
        }
        beta
    }

    #[test]
    fn matches_independent_qr_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = 50;
            let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x = design(n, &[x1, x2]);
            let y = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-5.0..5.0)));
            let fit = fit_ols(&x, &y).unwrap();
            let oracle = gram_schmidt_solve(x.values(), &y);
            assert!(
                (&fit.coefficients - &oracle).amax() < 1e-9,
                "QR oracle disagreement: {:?} vs {:?}",
                fit.coefficients,
                oracle
            );
        }
    }

    #[test]
    fn gram_inverse_matches_direct_inversion() {
        let x = design(6, &[vec![0.1, 0.4, -1.0, 2.0, 0.7, -0.3]]);
        let y = DVector::from_vec(vec![1.0, 0.0, 2.0, -1.0, 0.5, 0.25]);
        let fit = fit_ols(&x, &y).unwrap();
        let gram = x.values().transpose() * x.values();
        let direct = gram.try_inverse().unwrap();
        assert!((&fit.gram_inverse - &direct).amax() < 1e-10);
    }
}
