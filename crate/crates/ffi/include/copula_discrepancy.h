#ifndef COPULA_DISCREPANCY_H
#define COPULA_DISCREPANCY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CD_FAMILY_GUMBEL 0

#define CD_FAMILY_CLAYTON 1

#define CD_ESTIMATOR_MOMENT 0

#define CD_ESTIMATOR_MLE 1

typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_POINTER = 1,
  CD_STATUS_INVALID_ARGUMENT = 2,
  CD_STATUS_DATA_ERROR = 3,
  CD_STATUS_NUMERICAL_ERROR = 4,
  CD_STATUS_PANIC = 5,
} CdStatus;

/**
 * Opaque sample handle.
 */
typedef struct CdSample CdSample;

typedef struct CdReport {
  uint32_t estimator;
  double theta_p;
  double tau_p;
  double theta_hat;
  double tau_hat;
  double tau_hat_model;
  double cd;
  size_t n;
  double wall_time_s;
  bool degenerate;
  bool boundary;
  /**
   * NaN for the moment estimator.
   */
  double log_likelihood;
} CdReport;

typedef struct CdTestResult {
  double t_statistic;
  double p_value;
  bool reject;
  double alpha;
  double critical_value;
  double sigma_tau_hat;
} CdTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *cd_last_error_message(void);

/**
 * Copies `n` points from the arrays `x` and `y` into a new sample.
 *
 * # Safety
 * `x` and `y` must each point to `n` readable doubles; `out` must be a
 * valid pointer to write the handle to.
 */
enum CdStatus cd_sample_new(const double *x, const double *y, size_t n, struct CdSample **out);

/**
 * Releases a sample. NULL is ignored.
 *
 * # Safety
 * `sample` must come from this library and not have been freed already.
 */
void cd_sample_free(struct CdSample *sample);

/**
 * Number of points, or 0 for NULL.
 *
 * # Safety
 * `sample` must be NULL or a live handle.
 */
size_t cd_sample_len(const struct CdSample *sample);

/**
 * Copies the coordinates into caller buffers of at least `capacity` doubles.
 *
 * # Safety
 * `sample` must be a live handle; `x_out` and `y_out` must each have room
 * for `capacity` doubles.
 */
enum CdStatus cd_sample_copy(const struct CdSample *sample,
                             double *x_out,
                             double *y_out,
                             size_t capacity);

/**
 * Draws `n` points from the copula `family(theta)`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum CdStatus cd_copula_sample(uint32_t family_code,
                               double theta,
                               size_t n,
                               uint64_t seed,
                               struct CdSample **out);

/**
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum CdStatus cd_tau_from_theta(uint32_t family_code, double theta, double *out);

/**
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum CdStatus cd_theta_from_tau(uint32_t family_code, double tau, double *out);

/**
 * Empirical Kendall's tau of the sample.
 *
 * # Safety
 * `sample` must be a live handle and `out` a valid pointer to a double.
 */
enum CdStatus cd_kendall_tau(const struct CdSample *sample, double *out);

/**
 * Copula Discrepancy of the sample against `family(theta_p)`.
 *
 * # Safety
 * `sample` must be a live handle and `out` a valid pointer to a report.
 */
enum CdStatus cd_diagnose(const struct CdSample *sample,
                          uint32_t family_code,
                          double theta_p,
                          uint32_t estimator_code,
                          struct CdReport *out);

/**
 * Equivalence test of the sample's tau against `family(theta_p)` at level
 * `alpha`, with a jackknife variance estimate.
 *
 * # Safety
 * `sample` must be a live handle and `out` a valid pointer to a result.
 */
enum CdStatus cd_equivalence_test(const struct CdSample *sample,
                                  uint32_t family_code,
                                  double theta_p,
                                  double alpha,
                                  struct CdTestResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPULA_DISCREPANCY_H */
