//! Treatment-effect estimation with uncertainty intervals for unobserved
//! confounding.
//!
//! The library estimates average causal effects (over the population or
//! over the treated) from observational data with a binary treatment,
//! using arm-specific linear outcome regressions and their doubly robust
//! augmentations with a probit treatment model. Departures from
//! unconfoundedness are indexed by the correlations (rho0, rho1) between
//! the latent treatment error and the potential-outcome errors; for any
//! bound on those correlations the package computes the induced bias
//! range, an identification interval, and an uncertainty interval that
//! also carries the sampling error. A threshold search reports how much
//! correlation is needed before an effect becomes indistinguishable from
//! zero, and a simulation module reproduces the estimators' behavior
//! under known generating processes.
//!
//! Typical use:
//!
//! ```
//! use confound_ui::{
//!     fit_models, uncertainty_interval, Dataset, DesignMatrix, Estimand,
//!     EstimatorKind, RhoPair,
//! };
//!
//! # fn main() -> confound_ui::Result<()> {
//! let x = DesignMatrix::from_covariates(
//!     8,
//!     &[vec![-1.2, -0.5, 0.4, -0.3, 1.1, 0.6, -0.8, 1.5]],
//! )?;
//! let y = vec![-0.64, 0.83, 0.78, 0.27, 3.12, 2.46, -0.36, 3.79];
//! let z = vec![false, true, false, false, true, true, false, true];
//! let data = Dataset::new(y, z, x)?;
//! let models = fit_models(&data, None)?;
//! let estimate = confound_ui::effect_estimate(
//!     &data,
//!     &models,
//!     Estimand::Att,
//!     EstimatorKind::OutcomeRegression,
//!     false,
//! )?;
//! let ui = uncertainty_interval(&data, &models, &estimate, &RhoPair::symmetric(0.1)?, 0.05, 101)?;
//! assert!(ui.lower < ui.upper);
//! # Ok(())
//! # }
//! ```

pub mod bias;
pub mod design;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod mvn;
pub mod ols;
pub mod probit;
pub mod sim;
pub mod ui;
pub mod variance;

pub use bias::{
    bias_dr_ate, bias_dr_att, bias_or_ate, bias_or_att, confounding_bias, sigma_corrected,
    BiasModel,
};
pub use design::DesignMatrix;
pub use dist::{inverse_mills, normal_cdf, normal_pdf, normal_quantile, Arm};
pub use error::{Error, Result};
pub use estimators::{
    estimate_dr_ate, estimate_dr_att, estimate_or_ate, estimate_or_att, fit_models, Dataset,
    EffectEstimate, Estimand, EstimatorKind, FittedModels, OVERLAP_TOL,
};
pub use mvn::RngSeed;
pub use ols::{fit_ols, OlsFit};
pub use probit::{fit_probit, ProbitFit};
pub use ui::{
    confidence_interval, identification_interval, sensitivity_threshold, uncertainty_interval,
    RhoInterval, RhoPair, ThresholdResult, UncertaintyInterval, DEFAULT_GRID,
};
pub use variance::{effect_estimate, variance};
