#ifndef PROMIL_H
#define PROMIL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PROMIL_HEAD_PROMIL 0

#define PROMIL_HEAD_MAX 1

#define PROMIL_HEAD_MEAN 2

/**
 * Result code of every fallible call.
 */
typedef enum PromilStatus {
  PROMIL_STATUS_OK = 0,
  PROMIL_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside the operation's domain.
   */
  PROMIL_STATUS_DOMAIN = 2,
  PROMIL_STATUS_PARSE = 3,
  PROMIL_STATUS_CONFIG = 4,
  PROMIL_STATUS_IO = 5,
  PROMIL_STATUS_FORMAT = 6,
  PROMIL_STATUS_NUMERICAL = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  PROMIL_STATUS_INTERNAL = 8,
} PromilStatus;

/**
 * A trained model loaded from a `promil-model/1` file.
 */
typedef struct PromilModel PromilModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *promil_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *promil_version(void);

/**
 * Loads a model file. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a nul-terminated UTF-8 string and `out` a valid pointer.
 */
enum PromilStatus promil_model_load(const char *path, struct PromilModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`promil_model_load`] and not be freed twice.
 */
void promil_model_free(struct PromilModel *model);

/**
 * Number of features per instance.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum PromilStatus promil_model_input_dim(const struct PromilModel *model, size_t *out);

/**
 * The model's learned quantile level.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum PromilStatus promil_model_q(const struct PromilModel *model, double *out);

/**
 * Scores one bag with the given head (`PROMIL_HEAD_*`). Bags with a score
 * above 0.5 are classified positive.
 *
 * # Safety
 * `data` must point to `n_instances * dim` doubles; `out_score` must be valid.
 */
enum PromilStatus promil_model_score_bag(const struct PromilModel *model,
                                         const double *data,
                                         size_t n_instances,
                                         size_t dim,
                                         uint32_t head,
                                         double *out_score);

/**
 * Bernstein quantile estimate of `values` (any order, each in [0, 1]) at
 * level `q` in [0, 1]. `q = 0` gives the maximum and `q = 1` the minimum.
 *
 * # Safety
 * `values` must point to `n` doubles; `out` must be valid.
 */
enum PromilStatus promil_estimate_quantile(const double *values,
                                           size_t n,
                                           double q,
                                           double eps,
                                           double *out);

/**
 * Estimate and its derivatives for `q` in (0, 1). `out_grad_values`
 * receives `n` partials in the caller's order of `values`.
 *
 * # Safety
 * `values` and `out_grad_values` must point to `n` doubles; the other out
 * pointers must be valid.
 */
enum PromilStatus promil_quantile_gradients(const double *values,
                                            size_t n,
                                            double q,
                                            double eps,
                                            double *out_value,
                                            double *out_grad_values,
                                            double *out_grad_q);

/**
 * Area under the ROC curve. `labels` holds 0 or 1 per score.
 *
 * # Safety
 * `scores` and `labels` must point to `n` elements; `out` must be valid.
 */
enum PromilStatus promil_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROMIL_H */
