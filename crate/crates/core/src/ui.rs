//! Identification intervals, uncertainty intervals, and the sensitivity
//! threshold for the error correlations.
//!
//! An uncertainty interval widens the usual confidence interval to carry
//! both sampling variability and the range of confounding bias compatible
//! with assumed bounds on (rho0, rho1). The bias is scanned over a grid on
//! the rho intervals; the standard error does not depend on rho.

use crate::bias::BiasModel;
use crate::dist::{normal_quantile, Arm};
use crate::error::{Error, Result};
use crate::estimators::{Dataset, EffectEstimate, Estimand, FittedModels};

/// Grid points per rho axis, endpoints included.
pub const DEFAULT_GRID: usize = 101;

/// A closed subinterval of [-1, 1] for one error correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoInterval {
    low: f64,
    high: f64,
}

impl RhoInterval {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !low.is_finite() || !high.is_finite() {
            return Err(Error::invalid_argument("rho bounds must be finite"));
        }
        if !(-1.0..=1.0).contains(&low) || !(-1.0..=1.0).contains(&high) || low > high {
            return Err(Error::invalid_argument(format!(
                "rho interval [{low}, {high}] must satisfy -1 <= low <= high <= 1"
            )));
        }
        Ok(RhoInterval { low, high })
    }

    /// The degenerate interval at a single value.
    pub fn point(rho: f64) -> Result<Self> {
        Self::new(rho, rho)
    }

    /// The degenerate interval at zero, which recovers the ordinary CI.
    pub fn zero() -> Self {
        RhoInterval { low: 0.0, high: 0.0 }
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn is_point(&self) -> bool {
        self.low == self.high
    }

    pub fn contains(&self, rho: f64) -> bool {
        self.low <= rho && rho <= self.high
    }

    /// Evenly spaced grid over the interval, endpoints exact.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        if self.is_point() {
            return vec![self.low];
        }
        let p = points.max(2);
        let step = (self.high - self.low) / (p - 1) as f64;
        (0..p)
            .map(|i| if i == p - 1 { self.high } else { self.low + step * i as f64 })
            .collect()
    }
}

/// Assumed bounds on both error correlations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoPair {
    pub rho0: RhoInterval,
    pub rho1: RhoInterval,
}

impl RhoPair {
    pub fn new(rho0: RhoInterval, rho1: RhoInterval) -> Self {
        RhoPair { rho0, rho1 }
    }

    /// Both correlations in [-r, r].
    pub fn symmetric(r: f64) -> Result<Self> {
        let iv = RhoInterval::new(-r, r)?;
        Ok(RhoPair { rho0: iv, rho1: iv })
    }

    /// Both correlations in [0, r].
    pub fn nonnegative(r: f64) -> Result<Self> {
        let iv = RhoInterval::new(0.0, r)?;
        Ok(RhoPair { rho0: iv, rho1: iv })
    }

    /// Degenerate at (0, 0).
    pub fn zero() -> Self {
        RhoPair { rho0: RhoInterval::zero(), rho1: RhoInterval::zero() }
    }
}

/// An interval estimate carrying both sampling and confounding uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintyInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub rho: RhoPair,
    pub estimand: Estimand,
    pub estimator: crate::estimators::EstimatorKind,
}

impl UncertaintyInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// The ordinary two-sided (1 - alpha) confidence interval.
pub fn confidence_interval(estimate: &EffectEstimate, alpha: f64) -> Result<(f64, f64)> {
    let c = critical_value(alpha)?;
    let half = c * check_se(estimate)?;
    Ok((estimate.value - half, estimate.value + half))
}

/// Range [min, max] of the confounding bias over the rho grid.
fn bias_range(model: &BiasModel, rho: &RhoPair, grid: usize) -> Result<(f64, f64)> {
    let mut low = 0.0;
    let mut high = 0.0;
    for (arm, interval) in [(Arm::Control, rho.rho0), (Arm::Treated, rho.rho1)] {
        let mut term_low = f64::INFINITY;
        let mut term_high = f64::NEG_INFINITY;
        for r in interval.grid(grid) {
            let t = model.term(arm, r)?;
            term_low = term_low.min(t);
            term_high = term_high.max(t);
        }
        low += term_low;
        high += term_high;
    }
    Ok((low, high))
}

/// The set of effect values compatible with the point estimate once the
/// confounding bias ranges over the rho bounds: [value - max bias, value - min bias].
pub fn identification_interval(
    data: &Dataset,
    models: &FittedModels,
    estimate: &EffectEstimate,
    rho: &RhoPair,
    grid: usize,
) -> Result<(f64, f64)> {
    check_grid(grid)?;
    let model = BiasModel::new(data, models, estimate.estimand, estimate.estimator)?;
    let (bias_low, bias_high) = bias_range(&model, rho, grid)?;
    Ok((estimate.value - bias_high, estimate.value - bias_low))
}

/// The (1 - alpha) uncertainty interval for the effect under the rho bounds.
pub fn uncertainty_interval(
    data: &Dataset,
    models: &FittedModels,
    estimate: &EffectEstimate,
    rho: &RhoPair,
    alpha: f64,
    grid: usize,
) -> Result<UncertaintyInterval> {
    check_grid(grid)?;
    let model = BiasModel::new(data, models, estimate.estimand, estimate.estimator)?;
    ui_from_model(&model, estimate, rho, alpha, grid)
}

fn ui_from_model(
    model: &BiasModel,
    estimate: &EffectEstimate,
    rho: &RhoPair,
    alpha: f64,
    grid: usize,
) -> Result<UncertaintyInterval> {
    let c = critical_value(alpha)?;
    let half = c * check_se(estimate)?;
    let (bias_low, bias_high) = bias_range(model, rho, grid)?;
    Ok(UncertaintyInterval {
        lower: estimate.value - bias_high - half,
        upper: estimate.value - bias_low + half,
        alpha,
        rho: *rho,
        estimand: estimate.estimand,
        estimator: estimate.estimator,
    })
}

/// Result of the rho-threshold search.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdResult {
    /// Smallest magnitude r at which the uncertainty interval covers zero.
    pub threshold: f64,
    /// The ordinary CI already covers zero, so the threshold is zero.
    pub ci_covers_zero: bool,
    /// The search hit the feasibility or |rho| <= 1 boundary without the
    /// interval ever covering zero; `threshold` is that boundary.
    pub at_boundary: bool,
}

/// Smallest r such that the uncertainty interval with rho bounds [-r, r]
/// (symmetric mode) or [0, r] (one-sided mode) on both axes covers zero.
///
/// The interval is monotone in r, so bisection applies; the search stops at
/// resolution `tol`. Returns zero with a flag when the CI covers zero.
pub fn sensitivity_threshold(
    data: &Dataset,
    models: &FittedModels,
    estimate: &EffectEstimate,
    alpha: f64,
    symmetric: bool,
    tol: f64,
) -> Result<ThresholdResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid_argument("threshold tolerance must be positive"));
    }
    let (ci_low, ci_high) = confidence_interval(estimate, alpha)?;
    if ci_low <= 0.0 && 0.0 <= ci_high {
        return Ok(ThresholdResult { threshold: 0.0, ci_covers_zero: true, at_boundary: false });
    }

    let model = BiasModel::new(data, models, estimate.estimand, estimate.estimator)?;
    // Stay strictly inside the feasible rho region for both active arms.
    let limit = model.feasible_rho_limit();
    let cap = if limit.is_finite() { (limit * (1.0 - 1e-9)).min(1.0) } else { 1.0 };
    let covers = |r: f64| -> Result<bool> {
        let rho = if symmetric { RhoPair::symmetric(r)? } else { RhoPair::nonnegative(r)? };
        let ui = ui_from_model(&model, estimate, &rho, alpha, DEFAULT_GRID)?;
        Ok(ui.covers(0.0))
    };

    if !covers(cap)? {
        return Ok(ThresholdResult { threshold: cap, ci_covers_zero: false, at_boundary: true });
    }
    let mut low = 0.0;
    let mut high = cap;
    while high - low > tol {
        let mid = 0.5 * (low + high);
        if covers(mid)? {
            high = mid;
        } else {
            low = mid;
        }
    }
    Ok(ThresholdResult { threshold: high, ci_covers_zero: false, at_boundary: false })
}

fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid_argument(format!("alpha {alpha} must lie in (0, 1)")));
    }
    normal_quantile(1.0 - alpha / 2.0)
}

fn check_se(estimate: &EffectEstimate) -> Result<f64> {
    if !(estimate.std_error.is_finite() && estimate.std_error >= 0.0) {
        return Err(Error::invalid_argument(format!(
            "standard error {} must be finite and nonnegative",
            estimate.std_error
        )));
    }
    Ok(estimate.std_error)
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::invalid_argument("rho grid needs at least 2 points"));
    }
    Ok(())
}
