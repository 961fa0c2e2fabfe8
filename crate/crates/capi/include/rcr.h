/* C interface for the rcr library. */

#ifndef RCR_H
#define RCR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum RcrStatus {
  RCR_STATUS_OK = 0,
  RCR_STATUS_NULL_POINTER = 1,
  RCR_STATUS_INVALID_UTF8 = 2,
  RCR_STATUS_INVALID_ARGUMENT = 3,
  RCR_STATUS_TRAINING_FAILED = 4,
  RCR_STATUS_IO_ERROR = 5,
} RcrStatus;

/**
 * Opaque dataset handle.
 */
typedef struct RcrDataset RcrDataset;

/**
 * Opaque trained regressor/rejector handle.
 */
typedef struct RcrPair RcrPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or NULL.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *rcr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rcr_version(void);

/**
 * Build a dataset from row-major features (n_rows x n_cols), targets of
 * length n_rows, and an optional cost vector of length n_rows (pass NULL for
 * none). The data is copied.
 *
 * # Safety
 * `features` must point to n_rows * n_cols doubles, `targets` to n_rows
 * doubles, and `costs` to n_rows doubles when non-NULL.
 */
enum RcrStatus rcr_dataset_new(const double *features,
                               size_t n_rows,
                               size_t n_cols,
                               const double *targets,
                               const double *costs,
                               struct RcrDataset **out);

/**
 * Load a dataset from a CSV file with a header row. `cost_column` may be
 * NULL.
 *
 * # Safety
 * All non-NULL pointers must be valid NUL-terminated strings; `out` must be
 * a valid destination pointer.
 */
enum RcrStatus rcr_dataset_load_csv(const char *path,
                                    const char *target_column,
                                    const char *cost_column,
                                    struct RcrDataset **out);

/**
 * Number of rows; 0 for NULL.
 */
size_t rcr_dataset_rows(const struct RcrDataset *ds);

/**
 * Feature dimension; 0 for NULL.
 */
size_t rcr_dataset_dim(const struct RcrDataset *ds);

/**
 * Free a dataset handle. NULL is a no-op.
 *
 * # Safety
 * `ds` must have been produced by this library and not freed before.
 */
void rcr_dataset_free(struct RcrDataset *ds);

/**
 * Train a regressor/rejector pair. `options_json` may be NULL or "{}" for
 * defaults; `val` is used for learning-rate selection when
 * `select_lr` is true, and may equal `train`.
 *
 * # Safety
 * `train`, `val`, and `out` must be valid; `options_json` NULL or a valid
 * NUL-terminated string.
 */
enum RcrStatus rcr_train(const struct RcrDataset *train,
                         const struct RcrDataset *val,
                         const char *options_json,
                         struct RcrPair **out);

/**
 * Predict one example: writes the regressor output and whether the pair
 * accepts it (1) or rejects it (0).
 *
 * # Safety
 * `x` must point to `dim` doubles; the output pointers must be valid.
 */
enum RcrStatus rcr_pair_predict(const struct RcrPair *pair,
                                const double *x,
                                size_t dim,
                                double *out_prediction,
                                int *out_accept);

/**
 * Evaluate a pair on a dataset under a cost specification given as JSON
 * (a number for a constant cost, or "per_example"). On success `*out_json`
 * receives a JSON metrics document to be freed with `rcr_string_free`.
 *
 * # Safety
 * All pointers must be valid as described above.
 */
enum RcrStatus rcr_pair_evaluate(const struct RcrPair *pair,
                                 const struct RcrDataset *ds,
                                 const char *cost_json,
                                 char **out_json);

/**
 * Save a pair to a binary checkpoint file.
 *
 * # Safety
 * `pair` must be a live handle; `path` a valid NUL-terminated string.
 */
enum RcrStatus rcr_pair_save(const struct RcrPair *pair, const char *path);

/**
 * Load a pair from a binary checkpoint file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` a valid destination.
 */
enum RcrStatus rcr_pair_load(const char *path, struct RcrPair **out);

/**
 * Free a pair handle. NULL is a no-op.
 *
 * # Safety
 * `pair` must have been produced by this library and not freed before.
 */
void rcr_pair_free(struct RcrPair *pair);

/**
 * Free a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must have been produced by this library and not freed before.
 */
void rcr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCR_H */
