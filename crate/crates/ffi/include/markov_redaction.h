#ifndef MARKOV_REDACTION_H
#define MARKOV_REDACTION_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
enum MrStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  MR_STATUS_OK = 0,
  MR_STATUS_NULL_POINTER = 1,
  MR_STATUS_INVALID_MODEL = 2,
  MR_STATUS_DOMAIN = 3,
  MR_STATUS_INDEX_OUT_OF_RANGE = 4,
  MR_STATUS_LIMIT = 5,
  MR_STATUS_BUDGET = 6,
  MR_STATUS_INFEASIBLE = 7,
  MR_STATUS_INVALID_MECHANISM = 8,
  MR_STATUS_PARSE = 9,
  MR_STATUS_IO = 10,
  MR_STATUS_PANIC = 11,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum MrStatus MrStatus;
#else
typedef int32_t MrStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Values of the `kind` argument of [`mr_build`].
 */
enum MrKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  MR_KIND_MQ = 0,
  MR_KIND_THREE_R_RELAXATION = 1,
  MR_KIND_THREE_R_NUMERICAL = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum MrKind MrKind;
#else
typedef int32_t MrKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque redaction mechanism.
 */
typedef struct MrMechanism MrMechanism;

/**
 * Opaque chain model.
 */
typedef struct MrModel MrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mr_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
MrStatus mr_model_new(size_t n, double alpha, double beta, struct MrModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from this library not yet freed.
 */
void mr_model_free(struct MrModel *model);

/**
 * # Safety
 * `model` must be a live handle; `pi0` and `pi1` must be writable.
 */
MrStatus mr_model_stationary(const struct MrModel *model, double *pi0, double *pi1);

/**
 * Influence of a 0-valued private record at distance `delta`; +inf at 0.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
MrStatus mr_influence_low(const struct MrModel *model, size_t delta, double *out);

/**
 * Influence of a 1-valued private record at distance `delta`; +inf at 0.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
MrStatus mr_influence_high(const struct MrModel *model, size_t delta, double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
MrStatus mr_delta_star(const struct MrModel *model, double eps, size_t *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
MrStatus mr_dim_upper_bound(const struct MrModel *model, size_t p, double eps, double *out);

/**
 * Builds a mechanism. The split is used only when `has_split` is true;
 * `grid_steps` and `cap` only apply to the numerical construction, where 0
 * selects the default.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
MrStatus mr_build(const struct MrModel *model,
                  int32_t kind,
                  size_t p,
                  double eps,
                  bool has_split,
                  double eps_left,
                  double eps_right,
                  size_t grid_steps,
                  size_t cap,
                  struct MrMechanism **out);

/**
 * Custom mechanism from a row-major `n x 2` table of redaction
 * probabilities `r_t(0), r_t(1)`.
 *
 * # Safety
 * `table` must point to `2 * n` readable doubles; `out` must be writable.
 */
MrStatus mr_mechanism_new(size_t p, const double *table, size_t n, struct MrMechanism **out);

/**
 * # Safety
 * `mech` must be NULL or a handle from this library not yet freed.
 */
void mr_mechanism_free(struct MrMechanism *mech);

/**
 * # Safety
 * `mech` must be a live handle; `n` and `p` must be writable.
 */
MrStatus mr_mechanism_shape(const struct MrMechanism *mech, size_t *n, size_t *p);

/**
 * Redaction probabilities of record `t` (1-based).
 *
 * # Safety
 * `mech` must be a live handle; `r0` and `r1` must be writable.
 */
MrStatus mr_mechanism_row(const struct MrMechanism *mech, size_t t, double *r0, double *r1);

/**
 * Exact leakage by enumeration; `cap` of 0 selects the default.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
MrStatus mr_exact_leakage(const struct MrModel *model,
                          const struct MrMechanism *mech,
                          size_t cap,
                          double *out);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
MrStatus mr_exact_utility(const struct MrModel *model, const struct MrMechanism *mech, double *out);

/**
 * # Safety
 * Handles must be live; `estimate` and `standard_error` must be writable.
 */
MrStatus mr_monte_carlo_utility(const struct MrModel *model,
                                const struct MrMechanism *mech,
                                uint64_t trials,
                                uint64_t seed,
                                double *estimate,
                                double *standard_error);

/**
 * Serializes a model and mechanism in the mechanism file format. Free the
 * result with [`mr_string_free`].
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
MrStatus mr_mechanism_to_string(const struct MrModel *model,
                                const struct MrMechanism *mech,
                                char **out);

/**
 * Parses the mechanism file format into new model and mechanism handles.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `model` and `mech` must be writable.
 */
MrStatus mr_mechanism_from_string(const char *text,
                                  struct MrModel **model,
                                  struct MrMechanism **mech);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void mr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARKOV_REDACTION_H */
