#ifndef CONFOUND_UI_H
#define CONFOUND_UI_H

/* Generated by cbindgen from confound-ui-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible function.
 */
typedef enum confound_ui_status {
  CONFOUND_UI_STATUS_OK = 0,
  /*
   A pointer argument that must not be null was null.
   */
  CONFOUND_UI_STATUS_NULL_POINTER = 1,
  /*
   An argument was out of range or structurally invalid.
   */
  CONFOUND_UI_STATUS_INVALID_ARGUMENT = 2,
  /*
   The data cannot support the requested fit.
   */
  CONFOUND_UI_STATUS_INVALID_DATA = 3,
  /*
   Model fitting failed (non-convergence, singularity).
   */
  CONFOUND_UI_STATUS_FIT_FAILED = 4,
  /*
   The requested rho is incompatible with the fitted variances.
   */
  CONFOUND_UI_STATUS_INFEASIBLE_RHO = 5,
  /*
   A propensity score leaves no overlap for inverse weighting.
   */
  CONFOUND_UI_STATUS_NO_OVERLAP = 6,
  /*
   An internal invariant was violated.
   */
  CONFOUND_UI_STATUS_PANIC = 7,
} confound_ui_status;

/*
 A dataset with its fitted outcome and treatment models.
 */
typedef struct confound_ui_analysis confound_ui_analysis;

/*
 An observational sample ready for fitting.
 */
typedef struct confound_ui_dataset confound_ui_dataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Builds a dataset from row-major covariates. `y` has `n` entries, `z` has
 `n` entries of 0 or 1, and `x` has `n * covariate_count` entries with
 row i at `x[i * covariate_count .. (i + 1) * covariate_count]`. An
 intercept column is added internally; `covariate_count` may be 0, in
 which case `x` may be null.

 # Safety

 `y`, `z` (and `x` when `covariate_count > 0`) must point to readable
 arrays of the stated lengths, and `out` must be a valid pointer.
 */
enum confound_ui_status confound_ui_dataset_new(const double *y,
                                                const int32_t *z,
                                                const double *x,
                                                size_t n,
                                                size_t covariate_count,
                                                struct confound_ui_dataset **out);

/*
 Releases a dataset handle. A null pointer is a no-op.

 # Safety

 `dataset` must be null or a pointer returned by
 [`confound_ui_dataset_new`] that has not already been freed.
 */
void confound_ui_dataset_free(struct confound_ui_dataset *dataset);

/*
 Fits the arm-specific outcome regressions and the probit treatment
 model, producing the handle the estimation functions take. The dataset
 remains owned by the caller and may be freed once this returns.

 # Safety

 `dataset` must be a live handle from [`confound_ui_dataset_new`] and
 `out` a valid pointer.
 */
enum confound_ui_status confound_ui_analysis_new(const struct confound_ui_dataset *dataset,
                                                 struct confound_ui_analysis **out);

/*
 Releases an analysis handle. A null pointer is a no-op.

 # Safety

 `analysis` must be null or a pointer returned by
 [`confound_ui_analysis_new`] that has not already been freed.
 */
void confound_ui_analysis_free(struct confound_ui_analysis *analysis);

/*
 Point estimate and sandwich standard error. `estimand` is 0 for ATE and
 1 for ATT; `estimator` is 0 for outcome regression and 1 for doubly
 robust; nonzero `large_sample` selects the large-sample variance form.

 # Safety

 `analysis` must be a live handle; `value` and `std_error` must be valid
 pointers.
 */
enum confound_ui_status confound_ui_estimate(const struct confound_ui_analysis *analysis,
                                             int32_t estimand,
                                             int32_t estimator,
                                             int32_t large_sample,
                                             double *value,
                                             double *std_error);

/*
 Confidence, identification, and uncertainty intervals under the rho
 bounds `[rho0_low, rho0_high] x [rho1_low, rho1_high]`. Any of the three
 out-pairs may be null to skip it. `grid` is the number of grid points
 per rho axis (at least 2 unless the interval is a point).

 # Safety

 `analysis` must be a live handle; each non-null out-pointer must be
 valid for writes.
 */
enum confound_ui_status confound_ui_uncertainty_interval(const struct confound_ui_analysis *analysis,
                                                         int32_t estimand,
                                                         int32_t estimator,
                                                         int32_t large_sample,
                                                         double rho0_low,
                                                         double rho0_high,
                                                         double rho1_low,
                                                         double rho1_high,
                                                         double alpha,
                                                         size_t grid,
                                                         double *ci_lower,
                                                         double *ci_upper,
                                                         double *ii_lower,
                                                         double *ii_upper,
                                                         double *ui_lower,
                                                         double *ui_upper);

/*
 Smallest rho bound at which the uncertainty interval covers zero.
 Nonzero `one_sided` searches [0, r] instead of [-r, r]. `ci_covers_zero`
 and `at_boundary` receive 0/1 flags and may be null.

 # Safety

 `analysis` must be a live handle; `threshold` must be valid for writes;
 the flag pointers may each be null or valid for writes.
 */
enum confound_ui_status confound_ui_sensitivity_threshold(const struct confound_ui_analysis *analysis,
                                                          int32_t estimand,
                                                          int32_t estimator,
                                                          int32_t large_sample,
                                                          double alpha,
                                                          int32_t one_sided,
                                                          double tol,
                                                          double *threshold,
                                                          int32_t *ci_covers_zero,
                                                          int32_t *at_boundary);

/*
 Description of the most recent failure on this thread, or null if the
 last call succeeded. The pointer is valid until the next call into this
 library from the same thread.
 */
const char *confound_ui_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFOUND_UI_H */
