//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model fitting, interval construction, and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// The design matrix has (numerically) linearly dependent columns.
    #[error("design matrix is rank deficient at column {column} (pivot {pivot:.3e})")]
    RankDeficient { column: usize, pivot: f64 },

    /// The design matrix violates a structural invariant.
    #[error("invalid design matrix: {reason}")]
    InvalidDesign { reason: String },

    /// The treatment vector contains a single class.
    #[error("degenerate treatment: all {n} observations have z = {value}")]
    DegenerateTreatment { n: usize, value: u8 },

    /// One arm has too few observations to fit its models.
    #[error("arm {arm} has {rows} observations but at least {needed} are needed")]
    ArmTooSmall { arm: u8, rows: usize, needed: usize },

    /// Probit maximum likelihood did not converge.
    #[error("probit fit did not converge after {iterations} iterations (max |score| = {score:.3e})")]
    ProbitNotConverged { iterations: usize, score: f64 },

    /// An estimated propensity score is too close to 0 or 1 for weighting.
    #[error("propensity score {propensity:.3e} at row {row} leaves no overlap for arm {arm}; treatment probabilities must be strictly inside (0, 1)")]
    NoOverlap { row: usize, propensity: f64, arm: u8 },

    /// The assumed confounding correlation is incompatible with the data:
    /// the corrected residual variance would be non-positive.
    #[error("rho = {rho} for arm {arm} is infeasible: the corrected variance denominator is {denominator:.3e}")]
    InfeasibleRho { rho: f64, arm: u8, denominator: f64 },

    /// A matrix that must be inverted is singular.
    #[error("singular matrix while computing {context}")]
    SingularMatrix { context: &'static str },

    /// A covariance matrix is not positive semi-definite.
    #[error("covariance matrix is not positive semi-definite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveSemiDefinite { eigenvalue: f64 },

    /// Quantile argument outside the open unit interval.
    #[error("quantile probability must lie strictly in (0, 1), got {p}")]
    QuantileDomain { p: f64 },

    /// An interval or configuration value is out of range.
    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    /// CSV ingestion failures with location information.
    #[error("input error: {reason}")]
    Input { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid_argument(reason: impl Into<String>) -> Self {
        Error::InvalidArgument { reason: reason.into() }
    }

    pub(crate) fn input(reason: impl Into<String>) -> Self {
        Error::Input { reason: reason.into() }
    }
}
