#ifndef IMPULSE_IQC_H
#define IMPULSE_IQC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define IQC_OK 0

#define IQC_ERR_NULL_POINTER -1

#define IQC_ERR_INVALID_UTF8 -2

#define IQC_ERR_INVALID_INPUT -3

#define IQC_ERR_DIMENSION -4

#define IQC_ERR_NOT_WELL_POSED -5

#define IQC_ERR_INVALID_SPEC -6

#define IQC_ERR_UNBOUNDED_SPEC -7

#define IQC_ERR_NO_ADMISSIBLE_PATHS -8

#define IQC_ERR_INFEASIBLE -9

#define IQC_ERR_RECONSTRUCTION_FAILED -10

#define IQC_ERR_RECONSTRUCTION_SINGULAR -11

#define IQC_ERR_SOLVER -12

#define IQC_ERR_JSON -13

#define IQC_ERR_WRONG_FORM -14

#define IQC_ERR_PANIC -15

#define IQC_ERR_OTHER -99

#define IQC_DWELL_ADT 0

#define IQC_DWELL_EDT 1

#define IQC_DWELL_MDT 2

#define IQC_DWELL_RDT 3

#define IQC_TEST_LIFTING 0

#define IQC_TEST_PATH 1

#define IQC_TEST_CLOCK 2

#define IQC_TEST_CLOCK_SLACK 3

#define IQC_TEST_ADT_STATIC 4

#define IQC_TEST_IQC_CLOCK 5

#define IQC_TEST_IQC_LIFTING 6

#define IQC_MODE_STABILITY 0

#define IQC_MODE_PERFORMANCE 1

#define IQC_MODE_GAIN 2

#define IQC_STATUS_FEASIBLE 0

#define IQC_STATUS_INFEASIBLE 1

#define IQC_STATUS_INACCURATE 2

#define IQC_STATUS_ERROR 3

#define IQC_ROUTE_IQC 0

#define IQC_ROUTE_SLACK 1

/**
 * Opaque estimator handle with its certified bound.
 */
typedef struct IqcEstimator IqcEstimator;

/**
 * Opaque system handle (any system file form).
 */
typedef struct IqcSystem IqcSystem;

/**
 * Dwell-time condition; `kind` is one of `IQC_DWELL_*`.
 */
typedef struct IqcDwell {
  int32_t kind;
  uint32_t tmin;
  uint32_t tmax;
} IqcDwell;

/**
 * Result of one test; `gamma` is NaN unless the mode is gain and the test is feasible.
 */
typedef struct IqcAnalysis {
  int32_t status;
  double gamma;
  double margin;
  double seconds;
} IqcAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *iqc_version(void);

/**
 * Message of the last error on this thread; valid until the next failing call on the same thread.
 */
const char *iqc_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by an `iqc_*_to_json` function.
 */
void iqc_string_free(char *s);

/**
 * Parse a system description in JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t iqc_system_from_json(const char *json, struct IqcSystem **out);

/**
 * Builtin system by name (`exa1`, `exa_syn`, `hold_loop`); `beta` is used by `exa1` only and must be NaN otherwise.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t iqc_system_builtin(const char *name,
                           double beta,
                           struct IqcSystem **out);

/**
 * Serialize a system to JSON; release the result with [`iqc_string_free`].
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
int32_t iqc_system_to_json(const struct IqcSystem *sys, char **out);

/**
 * # Safety
 * `sys` must be null or a handle not yet freed.
 */
void iqc_system_free(struct IqcSystem *sys);

/**
 * Run one test. `nu` and `path_len` of zero select the defaults; `eps ≤ 0` selects the default margin.
 * `gamma` is the bound of the performance mode and ignored otherwise.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
int32_t iqc_analyze(const struct IqcSystem *sys,
                    int32_t test,
                    struct IqcDwell spec,
                    int32_t mode,
                    double gamma,
                    size_t nu,
                    size_t path_len,
                    double eps,
                    struct IqcAnalysis *out);

/**
 * Synthesize an estimator for a plant handle. `gamma > 0` checks that bound, otherwise `γ` is minimized.
 *
 * # Safety
 * `plant` must be a live handle; `out` and `out_gamma` must be valid pointers.
 */
int32_t iqc_synthesize(const struct IqcSystem *plant,
                       int32_t route,
                       struct IqcDwell spec,
                       size_t nu,
                       double gamma,
                       double eps,
                       struct IqcEstimator **out,
                       double *out_gamma);

/**
 * Estimator order, or `-1` for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
int64_t iqc_estimator_order(const struct IqcEstimator *est);

/**
 * Certified bound of the estimator, or NaN for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
double iqc_estimator_gamma(const struct IqcEstimator *est);

/**
 * Serialize an estimator to JSON; release the result with [`iqc_string_free`].
 *
 * # Safety
 * `est` must be a live handle and `out` a valid pointer.
 */
int32_t iqc_estimator_to_json(const struct IqcEstimator *est, char **out);

/**
 * # Safety
 * `est` must be null or a handle not yet freed.
 */
void iqc_estimator_free(struct IqcEstimator *est);

/**
 * Interconnect a plant with an estimator; the result is a feedback-form system handle.
 *
 * # Safety
 * `plant` and `est` must be live handles and `out` a valid pointer.
 */
int32_t iqc_closed_loop(const struct IqcSystem *plant,
                        const struct IqcEstimator *est,
                        struct IqcSystem **out);

/**
 * Number of admissible impulse paths of length `len` for the range `[tmin, tmax]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t iqc_path_count(uint32_t tmin, uint32_t tmax, size_t len, size_t *out);

/**
 * Empirical lower bound on the energy gain from random sequences and disturbances.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
int32_t iqc_empirical_gain(const struct IqcSystem *sys,
                           struct IqcDwell spec,
                           size_t trials,
                           size_t horizon,
                           uint64_t seed,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPULSE_IQC_H */
