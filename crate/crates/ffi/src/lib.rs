//! C ABI over the core estimators: opaque handles, integer status codes,
//! and a thread-local error message.
//!
//! Every function that can fail returns a [`Status`]; on failure the
//! out-parameters are left untouched and a description is available from
//! [`confound_ui_last_error_message`] until the next call on the same
//! thread. Handles are created and released in pairs
//! (`confound_ui_dataset_new` / `confound_ui_dataset_free`,
//! `confound_ui_analysis_new` / `confound_ui_analysis_free`); passing a
//! handle to any function after freeing it is undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use confound_ui::{
    confidence_interval, effect_estimate, fit_models, identification_interval,
    sensitivity_threshold, uncertainty_interval, Dataset, DesignMatrix, Error, Estimand,
    EstimatorKind, FittedModels, RhoInterval, RhoPair,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    /// A pointer argument that must not be null was null.
    NullPointer = 1,
    /// An argument was out of range or structurally invalid.
    InvalidArgument = 2,
    /// The data cannot support the requested fit.
    InvalidData = 3,
    /// Model fitting failed (non-convergence, singularity).
    FitFailed = 4,
    /// The requested rho is incompatible with the fitted variances.
    InfeasibleRho = 5,
    /// A propensity score leaves no overlap for inverse weighting.
    NoOverlap = 6,
    /// An internal invariant was violated.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(error: &Error) -> Status {
    match error {
        Error::RankDeficient { .. }
        | Error::InvalidDesign { .. }
        | Error::DegenerateTreatment { .. }
        | Error::ArmTooSmall { .. }
        | Error::Input { .. } => Status::InvalidData,
        Error::ProbitNotConverged { .. }
        | Error::SingularMatrix { .. }
        | Error::NotPositiveSemiDefinite { .. } => Status::FitFailed,
        Error::NoOverlap { .. } => Status::NoOverlap,
        Error::InfeasibleRho { .. } => Status::InfeasibleRho,
        Error::QuantileDomain { .. } | Error::InvalidArgument { .. } => Status::InvalidArgument,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => Status::InvalidData,
    }
}

fn fail(error: Error) -> Status {
    let status = status_of(&error);
    set_error(error.to_string());
    status
}

fn guard(body: impl FnOnce() -> Status) -> Status {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            Status::Panic
        }
    }
}

/// An observational sample ready for fitting.
pub struct ConfoundUiDataset {
    data: Dataset,
}

/// A dataset with its fitted outcome and treatment models.
pub struct ConfoundUiAnalysis {
    data: Dataset,
    models: FittedModels,
}

fn decode_estimand(estimand: i32) -> Result<Estimand, Error> {
    match estimand {
        0 => Ok(Estimand::Ate),
        1 => Ok(Estimand::Att),
        other => Err(Error::InvalidArgument {
            reason: format!("estimand must be 0 (ATE) or 1 (ATT), got {other}"),
        }),
    }
}

fn decode_estimator(estimator: i32) -> Result<EstimatorKind, Error> {
    match estimator {
        0 => Ok(EstimatorKind::OutcomeRegression),
        1 => Ok(EstimatorKind::DoublyRobust),
        other => Err(Error::InvalidArgument {
            reason: format!(
                "estimator must be 0 (outcome regression) or 1 (doubly robust), got {other}"
            ),
        }),
    }
}

/// Builds a dataset from row-major covariates. `y` has `n` entries, `z` has
/// `n` entries of 0 or 1, and `x` has `n * covariate_count` entries with
/// row i at `x[i * covariate_count .. (i + 1) * covariate_count]`. An
/// intercept column is added internally; `covariate_count` may be 0, in
/// which case `x` may be null.
///
/// # Safety
///
/// `y`, `z` (and `x` when `covariate_count > 0`) must point to readable
/// arrays of the stated lengths, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn confound_ui_dataset_new(
    y: *const f64,
    z: *const i32,
    x: *const f64,
    n: usize,
    covariate_count: usize,
    out: *mut *mut ConfoundUiDataset,
) -> Status {
    guard(|| {
        if y.is_null() || z.is_null() || out.is_null() || (x.is_null() && covariate_count > 0) {
            set_error("null pointer argument".to_string());
            return Status::NullPointer;
        }
        let y = unsafe { std::slice::from_raw_parts(y, n) }.to_vec();
        let z_raw = unsafe { std::slice::from_raw_parts(z, n) };
        let mut z_bool = Vec::with_capacity(n);
        for (i, &zi) in z_raw.iter().enumerate() {
            match zi {
                0 => z_bool.push(false),
                1 => z_bool.push(true),
                other => {
                    return fail(Error::Input {
                        reason: format!("treatment value {other} at row {i} is not 0 or 1"),
                    })
                }
            }
        }
        let mut columns = vec![Vec::with_capacity(n); covariate_count];
        if covariate_count > 0 {
            let x = unsafe { std::slice::from_raw_parts(x, n * covariate_count) };
            for i in 0..n {
                for (j, column) in columns.iter_mut().enumerate() {
                    column.push(x[i * covariate_count + j]);
                }
            }
        }
        let design = match DesignMatrix::from_covariates(n, &columns) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        match Dataset::new(y, z_bool, design) {
            Ok(data) => {
                unsafe { *out = Box::into_raw(Box::new(ConfoundUiDataset { data })) };
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a dataset handle. A null pointer is a no-op.
///
/// # Safety
///
/// `dataset` must be null or a pointer returned by
/// [`confound_ui_dataset_new`] that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn confound_ui_dataset_free(dataset: *mut ConfoundUiDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Fits the arm-specific outcome regressions and the probit treatment
/// model, producing the handle the estimation functions take. The dataset
/// remains owned by the caller and may be freed once this returns.
///
/// # Safety
///
/// `dataset` must be a live handle from [`confound_ui_dataset_new`] and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn confound_ui_analysis_new(
    dataset: *const ConfoundUiDataset,
    out: *mut *mut ConfoundUiAnalysis,
) -> Status {
    guard(|| {
        if dataset.is_null() || out.is_null() {
            set_error("null pointer argument".to_string());
            return Status::NullPointer;
        }
        let data = unsafe { &(*dataset).data }.clone();
        match fit_models(&data, None) {
            Ok(models) => {
                unsafe { *out = Box::into_raw(Box::new(ConfoundUiAnalysis { data, models })) };
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases an analysis handle. A null pointer is a no-op.
///
/// # Safety
///
/// `analysis` must be null or a pointer returned by
/// [`confound_ui_analysis_new`] that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn confound_ui_analysis_free(analysis: *mut ConfoundUiAnalysis) {
    if !analysis.is_null() {
        drop(unsafe { Box::from_raw(analysis) });
    }
}

/// Point estimate and sandwich standard error. `estimand` is 0 for ATE and
/// 1 for ATT; `estimator` is 0 for outcome regression and 1 for doubly
/// robust; nonzero `large_sample` selects the large-sample variance form.
///
/// # Safety
///
/// `analysis` must be a live handle; `value` and `std_error` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn confound_ui_estimate(
    analysis: *const ConfoundUiAnalysis,
    estimand: i32,
    estimator: i32,
    large_sample: i32,
    value: *mut f64,
    std_error: *mut f64,
) -> Status {
    guard(|| {
        if analysis.is_null() || value.is_null() || std_error.is_null() {
            set_error("null pointer argument".to_string());
            return Status::NullPointer;
        }
        let a = unsafe { &*analysis };
        let run = || -> Result<(f64, f64), Error> {
            let est = effect_estimate(
                &a.data,
                &a.models,
                decode_estimand(estimand)?,
                decode_estimator(estimator)?,
                large_sample != 0,
            )?;
            Ok((est.value, est.std_error))
        };
        match run() {
            Ok((v, se)) => {
                unsafe {
                    *value = v;
                    *std_error = se;
                }
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Confidence, identification, and uncertainty intervals under the rho
/// bounds `[rho0_low, rho0_high] x [rho1_low, rho1_high]`. Any of the three
/// out-pairs may be null to skip it. `grid` is the number of grid points
/// per rho axis (at least 2 unless the interval is a point).
///
/// # Safety
///
/// `analysis` must be a live handle; each non-null out-pointer must be
/// valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn confound_ui_uncertainty_interval(
    analysis: *const ConfoundUiAnalysis,
    estimand: i32,
    estimator: i32,
    large_sample: i32,
    rho0_low: f64,
    rho0_high: f64,
    rho1_low: f64,
    rho1_high: f64,
    alpha: f64,
    grid: usize,
    ci_lower: *mut f64,
    ci_upper: *mut f64,
    ii_lower: *mut f64,
    ii_upper: *mut f64,
    ui_lower: *mut f64,
    ui_upper: *mut f64,
) -> Status {
    guard(|| {
        if analysis.is_null() {
            set_error("null pointer argument".to_string());
            return Status::NullPointer;
        }
        let a = unsafe { &*analysis };
        let run = || -> Result<((f64, f64), (f64, f64), (f64, f64)), Error> {
            let rho = RhoPair::new(
                RhoInterval::new(rho0_low, rho0_high)?,
                RhoInterval::new(rho1_low, rho1_high)?,
            );
            let est = effect_estimate(
                &a.data,
                &a.models,
                decode_estimand(estimand)?,
                decode_estimator(estimator)?,
                large_sample != 0,
            )?;
            let ci = confidence_interval(&est, alpha)?;
            let ii = identification_interval(&a.data, &a.models, &est, &rho, grid)?;
            let ui = uncertainty_interval(&a.data, &a.models, &est, &rho, alpha, grid)?;
            Ok((ci, ii, (ui.lower, ui.upper)))
        };
        match run() {
            Ok((ci, ii, ui)) => {
                unsafe {
                    write_pair(ci_lower, ci_upper, ci);
                    write_pair(ii_lower, ii_upper, ii);
                    write_pair(ui_lower, ui_upper, ui);
                }
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn write_pair(lower: *mut f64, upper: *mut f64, value: (f64, f64)) {
    if !lower.is_null() {
        unsafe { *lower = value.0 };
    }
    if !upper.is_null() {
        unsafe { *upper = value.1 };
    }
}

/// Smallest rho bound at which the uncertainty interval covers zero.
/// Nonzero `one_sided` searches [0, r] instead of [-r, r]. `ci_covers_zero`
/// and `at_boundary` receive 0/1 flags and may be null.
///
/// # Safety
///
/// `analysis` must be a live handle; `threshold` must be valid for writes;
/// the flag pointers may each be null or valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn confound_ui_sensitivity_threshold(
    analysis: *const ConfoundUiAnalysis,
    estimand: i32,
    estimator: i32,
    large_sample: i32,
    alpha: f64,
    one_sided: i32,
    tol: f64,
    threshold: *mut f64,
    ci_covers_zero: *mut i32,
    at_boundary: *mut i32,
) -> Status {
    guard(|| {
        if analysis.is_null() || threshold.is_null() {
            set_error("null pointer argument".to_string());
            return Status::NullPointer;
        }
        let a = unsafe { &*analysis };
        let run = || -> Result<confound_ui::ThresholdResult, Error> {
            let est = effect_estimate(
                &a.data,
                &a.models,
                decode_estimand(estimand)?,
                decode_estimator(estimator)?,
                large_sample != 0,
            )?;
            sensitivity_threshold(&a.data, &a.models, &est, alpha, one_sided == 0, tol)
        };
        match run() {
            Ok(result) => {
                unsafe {
                    *threshold = result.threshold;
                    if !ci_covers_zero.is_null() {
                        *ci_covers_zero = i32::from(result.ci_covers_zero);
                    }
                    if !at_boundary.is_null() {
                        *at_boundary = i32::from(result.at_boundary);
                    }
                }
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Description of the most recent failure on this thread, or null if the
/// last call succeeded. The pointer is valid until the next call into this
/// library from the same thread.
#[no_mangle]
pub extern "C" fn confound_ui_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.as_ptr(),
        None => ptr::null(),
    })
}
