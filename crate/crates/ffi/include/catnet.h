#ifndef CATNET_H
#define CATNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CatnetStatus {
  CATNET_STATUS_OK = 0,
  CATNET_STATUS_NULL_POINTER = 1,
  CATNET_STATUS_INVALID_ARGUMENT = 2,
  CATNET_STATUS_SHAPE_MISMATCH = 3,
  CATNET_STATUS_IO = 4,
  CATNET_STATUS_FORMAT = 5,
  CATNET_STATUS_NOT_UNIT_NORM = 6,
  CATNET_STATUS_UNDEFINED = 7,
  CATNET_STATUS_CONFIG = 8,
  CATNET_STATUS_RUNTIME = 9,
  CATNET_STATUS_PANIC = 10,
} CatnetStatus;

/**
 * Opaque network handle.
 */
typedef struct CatnetNetwork CatnetNetwork;

/**
 * Headline metrics of a finished run. `bwt` is NaN for single-task runs.
 */
typedef struct CatnetRunSummary {
  size_t n_tasks;
  double bwt;
  double mean_accuracy;
  double initial_accuracy;
} CatnetRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *catnet_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated
 * and always NUL-terminated when `len > 0`). Returns the buffer size the
 * full message needs, including the terminator, or 0 when there is no
 * error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t catnet_last_error_message(char *buf, size_t len);

/**
 * Creates a network with ReLU hidden layers and `classes` outputs,
 * initialized from `seed`.
 *
 * # Safety
 * `hidden` must be valid for `n_hidden` elements; `out` must be writable.
 */
enum CatnetStatus catnet_network_new(size_t input_dim,
                                     const size_t *hidden,
                                     size_t n_hidden,
                                     size_t classes,
                                     uint64_t seed,
                                     struct CatnetNetwork **out);

/**
 * Loads a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CatnetStatus catnet_network_load(const char *path, struct CatnetNetwork **out);

/**
 * Writes a checkpoint file atomically.
 *
 * # Safety
 * `net` must be a live handle; `path` a NUL-terminated string.
 */
enum CatnetStatus catnet_network_save(const struct CatnetNetwork *net, const char *path);

/**
 * Releases a handle. Null is accepted.
 *
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void catnet_network_free(struct CatnetNetwork *net);

/**
 * Input width, number of outputs and feature width.
 *
 * # Safety
 * `net` must be a live handle; each out pointer must be null or writable.
 */
enum CatnetStatus catnet_network_dims(const struct CatnetNetwork *net,
                                      size_t *input_dim,
                                      size_t *outputs,
                                      size_t *feature_dim);

/**
 * Writes the logits for one input vector into `logits` (`logits_len`
 * must equal the number of outputs).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum CatnetStatus catnet_network_forward(const struct CatnetNetwork *net,
                                         const double *x,
                                         size_t x_len,
                                         double *logits,
                                         size_t logits_len);

/**
 * Writes the L2-normalized feature for one input. A zero activation
 * yields the zero vector and sets `*zero_norm` to true.
 *
 * # Safety
 * Pointers must be valid for the given lengths; `zero_norm` may be null.
 */
enum CatnetStatus catnet_network_extract_feature(const struct CatnetNetwork *net,
                                                 const double *x,
                                                 size_t x_len,
                                                 double *feature,
                                                 size_t feature_len,
                                                 bool *zero_norm);

/**
 * Appends `m` output units; existing weights are untouched.
 *
 * # Safety
 * `net` must be a live handle.
 */
enum CatnetStatus catnet_network_expand_output(struct CatnetNetwork *net, size_t m, uint64_t seed);

/**
 * Herds up to `k` exemplars from `n` row-major feature vectors of width
 * `dim`, writing their indices in selection order to `out` (room for `k`)
 * and the number written, `min(k, n)`, to `out_count`.
 *
 * # Safety
 * `features` must hold `n * dim` values and `out` room for `k` indices;
 * `out_count` must be writable or null.
 */
enum CatnetStatus catnet_herd_select(const double *features,
                                     size_t n,
                                     size_t dim,
                                     size_t k,
                                     size_t *out,
                                     size_t *out_count);

/**
 * Nearest-mean classification of one feature against `n_classes`
 * row-major means of width `dim`.
 *
 * # Safety
 * `feature` must hold `dim` values, `means` `n_classes * dim`, and
 * `class_ids` `n_classes`; out pointers must be writable or null.
 */
enum CatnetStatus catnet_nme_classify(const double *feature,
                                      size_t dim,
                                      const double *means,
                                      const uint32_t *class_ids,
                                      size_t n_classes,
                                      uint32_t *out_class,
                                      double *out_distance,
                                      double *out_margin);

/**
 * Mean of the strict lower triangle of the `n`×`n` row-major matrix `r`.
 * Entries above the diagonal are ignored (NaN is fine there).
 * `CATNET_STATUS_UNDEFINED` when `n < 2`.
 *
 * # Safety
 * `r` must hold `n * n` values; `out` must be writable.
 */
enum CatnetStatus catnet_compute_bwt(const double *r, size_t n, double *out);

/**
 * Mean of the last row of `r`.
 *
 * # Safety
 * `r` must hold `n * n` values; `out` must be writable.
 */
enum CatnetStatus catnet_compute_mean_accuracy(const double *r, size_t n, double *out);

/**
 * `R[0][0]`.
 *
 * # Safety
 * `r` must hold `n * n` values; `out` must be writable.
 */
enum CatnetStatus catnet_initial_accuracy(const double *r, size_t n, double *out);

/**
 * Same as `catnet run --config <config> --out <out_dir> [--force]`.
 * `summary` may be null.
 *
 * # Safety
 * Paths must be NUL-terminated strings.
 */
enum CatnetStatus catnet_run_config(const char *config,
                                    const char *out_dir,
                                    bool force,
                                    struct CatnetRunSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CATNET_H */
