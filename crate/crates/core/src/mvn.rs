//! Seeded multivariate normal sampling.
//!
//! The generator is pinned to ChaCha8 (rand_chacha 0.3, exact version in the
//! manifest): draws are bit-identical for a given `RngSeed` on every platform,
//! and replication r of a study uses stream r of the same seed, so studies can
//! run replications in parallel without sharing generator state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A reproducible generator address: a 64-bit seed plus a stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    /// Instantiates the pinned generator for this (seed, stream) pair.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// A factor L with L L' equal to the given covariance.
///
/// Strictly positive definite inputs use the Cholesky factor; semi-definite
/// ones fall back to the eigendecomposition with tiny negative eigenvalues
/// clamped to zero. Anything indefinite beyond rounding error is rejected.
fn psd_factor(covariance: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = covariance.nrows();
    if covariance.ncols() != k {
        return Err(Error::invalid_argument("covariance matrix must be square"));
    }
    if (covariance - covariance.transpose()).amax() > 1e-10 * covariance.amax().max(1.0) {
        return Err(Error::invalid_argument("covariance matrix must be symmetric"));
    }
    if let Some(chol) = covariance.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let eigen = covariance.clone().symmetric_eigen();
    let max_eig = eigen.eigenvalues.amax();
    let tol = 1e-12 * max_eig.max(1.0);
    let mut scaled = eigen.eigenvectors.clone();
    for j in 0..k {
        let value = eigen.eigenvalues[j];
        if value < -tol {
            return Err(Error::NotPositiveSemiDefinite { eigenvalue: value });
        }
        let root = value.max(0.0).sqrt();
        for i in 0..k {
            scaled[(i, j)] *= root;
        }
    }
    Ok(scaled)
}

/// Draws `n` samples from N(mean, covariance); one draw per row.
///
/// Sampling is Cholesky-based (eigenvalue-based for semi-definite inputs)
/// and fully deterministic for a given `RngSeed`.
pub fn sample_mvn(
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
    seed: RngSeed,
    n: usize,
) -> Result<DMatrix<f64>> {
    sample_mvn_with(mean, covariance, &mut seed.rng(), n)
}

/// As `sample_mvn`, but drawing from a caller-owned generator so the draws
/// can share a stream with other sampling steps.
pub fn sample_mvn_with<R: Rng>(
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
    rng: &mut R,
    n: usize,
) -> Result<DMatrix<f64>> {
    let k = mean.len();
    if covariance.nrows() != k {
        return Err(Error::invalid_argument(format!(
            "mean has {k} entries but the covariance is {}x{}",
            covariance.nrows(),
            covariance.ncols()
        )));
    }
    let factor = psd_factor(covariance)?;
    let mut out = DMatrix::zeros(n, k);
    let mut shock = DVector::zeros(k);
    for i in 0..n {
        for j in 0..k {
            shock[j] = StandardNormal.sample(rng);
        }
        let draw = mean + &factor * &shock;
        out.row_mut(i).copy_from(&draw.transpose());
    }
    Ok(out)
}

/// The 3x3 error correlation matrix for latent treatment error eta and the
/// potential-outcome errors (eps0, eps1): unit diagonal, Corr(eta, eps_j) =
/// rho_j, and Corr(eps0, eps1) = rho0 * rho1.
pub fn error_correlation(rho0: f64, rho1: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0,
            rho0,
            rho1,
            rho0,
            1.0,
            rho0 * rho1,
            rho1,
            rho0 * rho1,
            1.0,
        ],
    )
}
