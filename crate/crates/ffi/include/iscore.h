#ifndef ISCORE_H
#define ISCORE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum IscoreStatus {
  ISCORE_STATUS_OK = 0,
  ISCORE_STATUS_NULL_POINTER = 1,
  ISCORE_STATUS_INVALID_UTF8 = 2,
  ISCORE_STATUS_DOMAIN = 3,
  ISCORE_STATUS_DEGENERATE = 4,
  ISCORE_STATUS_CONTRACT = 5,
  ISCORE_STATUS_PARSE = 6,
  ISCORE_STATUS_DATA = 7,
  ISCORE_STATUS_IO = 8,
  ISCORE_STATUS_PANIC = 9,
} IscoreStatus;

/**
 * Opaque disease model.
 */
typedef struct IscoreModel IscoreModel;

/**
 * Opaque labelled sample.
 */
typedef struct IscoreSample IscoreSample;

/**
 * Oracle predictivity parameters of a model.
 */
typedef struct IscoreOracleParams {
  double theta_e;
  double theta_c;
  double theta_i;
  double theta_i0;
  double bound_on_theta_e;
  double f_y_d;
  double noise_factor;
} IscoreOracleParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. Valid
 * until the next failing call on the same thread.
 */
const char *iscore_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *iscore_version(void);

/**
 * `E[min(Z, W)]` for independent `Z ~ Bin(n, p_z)`, `W ~ Bin(n, p_w)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum IscoreStatus iscore_expected_min(uint64_t n, double p_z, double p_w, double *out);

/**
 * `Pr(Z < W) + 0.5 Pr(Z = W)` for the same pair.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum IscoreStatus iscore_half_tie_probability(uint64_t n, double p_z, double p_w, double *out);

/**
 * Negative relative bias `b(n, lambda, r)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum IscoreStatus iscore_neg_rel_bias(uint64_t n, double lambda, double r, double *out);

/**
 * Tie-split probability `a(n, lambda, r)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum IscoreStatus iscore_tie_half_prob(uint64_t n, double lambda, double r, double *out);

/**
 * Parses a model spec (`maf = [...]`, `influential = [...]`, `t = {...}`).
 *
 * # Safety
 * `text` is a nul-terminated string; `out` must be valid for writes.
 */
enum IscoreStatus iscore_model_from_spec(const char *text, struct IscoreModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` is null or came from this library and was not freed before.
 */
void iscore_model_free(struct IscoreModel *model);

/**
 * Oracle parameters of a model.
 *
 * # Safety
 * `model` is a live handle; `out` must be valid for writes.
 */
enum IscoreStatus iscore_model_oracle_params(const struct IscoreModel *model,
                                             struct IscoreOracleParams *out);

/**
 * Draws `n` cases then `n` controls; `(seed, rep)` select the stream.
 *
 * # Safety
 * `model` is a live handle; `out` must be valid for writes.
 */
enum IscoreStatus iscore_simulate(const struct IscoreModel *model,
                                  size_t n,
                                  uint64_t seed,
                                  uint64_t rep,
                                  struct IscoreSample **out);

/**
 * Builds a sample from row-major `values` (`n_rows * n_vars`) and labels
 * (nonzero = case, 0 = control).
 *
 * # Safety
 * `labels` has `n_rows` and `values` `n_rows * n_vars` readable elements;
 * `out` must be valid for writes.
 */
enum IscoreStatus iscore_sample_from_rows(const uint8_t *labels,
                                          const uint32_t *values,
                                          size_t n_rows,
                                          size_t n_vars,
                                          struct IscoreSample **out);

/**
 * Releases a sample. Null is ignored.
 *
 * # Safety
 * `sample` is null or came from this library and was not freed before.
 */
void iscore_sample_free(struct IscoreSample *sample);

/**
 * Row and variable counts of a sample.
 *
 * # Safety
 * `sample` is a live handle; `rows` and `vars` must be valid for writes.
 */
enum IscoreStatus iscore_sample_dims(const struct IscoreSample *sample, size_t *rows, size_t *vars);

/**
 * I score of the variables `subset[0..len]` (0-based columns).
 *
 * # Safety
 * `sample` is a live handle, `subset` has `len` readable elements and
 * `out` must be valid for writes.
 */
enum IscoreStatus iscore_i_score(const struct IscoreSample *sample,
                                 const size_t *subset,
                                 size_t len,
                                 double *out);

/**
 * Training error estimate of the variables `subset[0..len]` on a sample
 * with equal class sizes.
 *
 * # Safety
 * As for [`iscore_i_score`].
 */
enum IscoreStatus iscore_theta_e_train(const struct IscoreSample *sample,
                                       const size_t *subset,
                                       size_t len,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISCORE_H */
