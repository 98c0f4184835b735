#ifndef MPRSEL_H
#define MPRSEL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define MPR_PENALTY_NONE 0

#define MPR_PENALTY_LASSO 1

#define MPR_PENALTY_SCAD 2

#define MPR_PENALTY_ALASSO 3

#define MPR_TUNING_SINGLE 0

#define MPR_TUNING_SINGLE_ADAPTIVE 1

#define MPR_TUNING_SEPARATE 2

#define MPR_TUNING_SEPARATE_ADAPTIVE 3

/**
 * Validated survival dataset.
 */
typedef struct MprDataset MprDataset;

/**
 * Result of a fit or a tuning-parameter selection.
 */
typedef struct MprFit MprFit;

typedef int32_t MprStatus;

/**
 * Settings for `mpr_select`. Obtain defaults from
 * `mpr_select_options_default` and override fields as needed.
 */
typedef struct MprSelectOptions {
  /**
   * One of the `MPR_PENALTY_*` constants.
   */
  int32_t penalty;
  /**
   * One of the `MPR_TUNING_*` constants, or -1 to derive it from the
   * penalty with a single tuning scalar.
   */
  int32_t tuning;
  double scad_a;
  double epsilon;
  double zero_tol;
  uint32_t max_iter;
  double lambda_lo;
  double lambda_hi;
  /**
   * 0 selects ten members per tuning scalar.
   */
  uint32_t de_population;
  uint32_t de_generations;
  double de_f;
  double de_cr;
  uint64_t seed;
} MprSelectOptions;

#define MPR_OK 0

#define MPR_ERR_NULL_POINTER 1

/**
 * Invalid settings or arguments.
 */
#define MPR_ERR_CONFIG 2

/**
 * Data rejected by validation.
 */
#define MPR_ERR_DATA 3

/**
 * Singular system, non-convergence or non-finite arithmetic.
 */
#define MPR_ERR_NUMERICAL 4

/**
 * Output buffer shorter than required.
 */
#define MPR_ERR_BUFFER_TOO_SMALL 5

/**
 * A Rust panic was caught at the boundary.
 */
#define MPR_ERR_INTERNAL 6

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *mpr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mpr_version(void);

/**
 * Builds a dataset from `n` subjects with `p` scale and `q` shape
 * covariates. `status` holds 1 for an event and 0 for censoring.
 *
 * # Safety
 * `time` and `status` must point to `n` values, `x` to `n * p` values and
 * `z` to `n * q` values (either may be null when its width is 0); `out`
 * must be a valid pointer.
 */
MprStatus mpr_dataset_new(const double *time,
                          const double *status,
                          size_t n,
                          const double *x,
                          size_t p,
                          const double *z,
                          size_t q,
                          struct MprDataset **out);

/**
 * # Safety
 * `dataset` must be null or a handle from `mpr_dataset_new` not yet freed.
 */
void mpr_dataset_free(struct MprDataset *dataset);

/**
 * Number of subjects, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t mpr_dataset_n(const struct MprDataset *dataset);

/**
 * Number of observed events, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t mpr_dataset_n_events(const struct MprDataset *dataset);

struct MprSelectOptions mpr_select_options_default(void);

/**
 * Unpenalized maximum-likelihood fit (on standardized covariates, reported
 * on the original scale).
 *
 * # Safety
 * `dataset` must be a live handle and `out` a valid pointer.
 */
MprStatus mpr_fit_unpenalized(const struct MprDataset *dataset, struct MprFit **out);

/**
 * Penalized fit with the tuning scalar(s) chosen by minimizing BIC.
 *
 * # Safety
 * `dataset` must be a live handle, `options` null (defaults) or valid, and
 * `out` a valid pointer.
 */
MprStatus mpr_select(const struct MprDataset *dataset,
                     const struct MprSelectOptions *options,
                     struct MprFit **out);

/**
 * # Safety
 * `fit` must be null or a handle not yet freed.
 */
void mpr_fit_free(struct MprFit *fit);

/**
 * Length of the coefficient vector, `(p + 1) + (q + 1)`, or 0 for null.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t mpr_fit_n_coefficients(const struct MprFit *fit);

/**
 * Number of scale coefficients, intercept included, or 0 for null.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t mpr_fit_n_scale(const struct MprFit *fit);

/**
 * Copies coefficients on the original covariate scale.
 *
 * # Safety
 * `fit` must be a live handle and `out` must hold `len` values.
 */
MprStatus mpr_fit_coefficients(const struct MprFit *fit, double *out, size_t len);

/**
 * Copies coefficients on the standardized covariate scale.
 *
 * # Safety
 * `fit` must be a live handle and `out` must hold `len` values.
 */
MprStatus mpr_fit_coefficients_standardized(const struct MprFit *fit, double *out, size_t len);

/**
 * Copies sandwich standard errors on the original scale.
 *
 * # Safety
 * `fit` must be a live handle and `out` must hold `len` values.
 */
MprStatus mpr_fit_std_errors(const struct MprFit *fit, double *out, size_t len);

/**
 * Copies the selection mask (1 = nonzero) into `out`.
 *
 * # Safety
 * `fit` must be a live handle and `out` must hold `len` values.
 */
MprStatus mpr_fit_selected(const struct MprFit *fit, uint8_t *out, size_t len);

/**
 * Copies the chosen tuning scalar(s); `*written` receives their count (1 or 2).
 *
 * # Safety
 * `fit` must be a live handle, `out` must hold `len` values and `written`
 * must be valid or null.
 */
MprStatus mpr_fit_lambda(const struct MprFit *fit, double *out, size_t len, size_t *written);

/**
 * Unpenalized log-likelihood at the estimate; NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double mpr_fit_loglik(const struct MprFit *fit);

/**
 * BIC at the chosen tuning values; NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double mpr_fit_bic(const struct MprFit *fit);

/**
 * Effective degrees of freedom `tr(I_lambda^-1 I_0)`; NaN when unavailable.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double mpr_fit_effective_df(const struct MprFit *fit);

/**
 * 1 if the final Newton iteration converged, 0 otherwise or for null.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
int32_t mpr_fit_converged(const struct MprFit *fit);

/**
 * Kaplan-Meier log cumulative hazard check: least-squares line of
 * `log H(t)` on `log t`. A slope near the Weibull shape and `r_squared`
 * near 1 support a Weibull baseline.
 *
 * # Safety
 * `time` and `status` must point to `n` values; the output pointers must be
 * valid.
 */
MprStatus mpr_weibull_check(const double *time,
                            const double *status,
                            size_t n,
                            double *slope,
                            double *intercept,
                            double *r_squared);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPRSEL_H */
