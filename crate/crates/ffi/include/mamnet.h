#ifndef MAMNET_H
#define MAMNET_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define MAMNET_OK 0

/**
 * Invalid argument or configuration.
 */
#define MAMNET_ERR_USAGE 1

/**
 * Unreadable, malformed, or mis-shaped input.
 */
#define MAMNET_ERR_DATA 2

/**
 * A non-finite value appeared during computation.
 */
#define MAMNET_ERR_NUMERIC 3

/**
 * A required pointer argument was null.
 */
#define MAMNET_ERR_NULL 4

/**
 * Internal panic caught at the boundary.
 */
#define MAMNET_ERR_PANIC 5

/**
 * Opaque handle to a loaded model.
 */
typedef struct MamnetModel MamnetModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mamnet_version(void);

/**
 * Message for the most recent failure on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *mamnet_last_error(void);

/**
 * Loads a checkpoint file. On success `*out` owns a handle to release with
 * [`mamnet_model_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
int32_t mamnet_model_load(const char *path, struct MamnetModel **out);

/**
 * Releases a handle from [`mamnet_model_load`]. Null is ignored.
 *
 * # Safety
 * `model` must come from `mamnet_model_load` and not be used afterwards.
 */
void mamnet_model_free(struct MamnetModel *model);

/**
 * Rows per window the model expects, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t mamnet_model_window_len(const struct MamnetModel *model);

/**
 * Raw columns per row (before feature selection), or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t mamnet_model_feature_count(const struct MamnetModel *model);

/**
 * Scores one window of raw, unnormalised rows given row-major as
 * `n_rows × n_cols` values. Writes the anomaly probability (classify) or
 * the forecast (regress) to `*score`.
 *
 * # Safety
 * `rows` must point to `n_rows * n_cols` readable doubles; `score` must be
 * writable; `model` must be a live handle.
 */
int32_t mamnet_model_predict_window(const struct MamnetModel *model,
                                    const double *rows,
                                    size_t n_rows,
                                    size_t n_cols,
                                    double *score);

/**
 * Writes `k` normalised DFT magnitudes `|X_j| / len` of `signal` to `out`.
 *
 * # Safety
 * `signal` must hold `len` doubles and `out` room for `k`.
 */
int32_t mamnet_dft_magnitudes(const double *signal, size_t len, size_t k, double *out);

/**
 * Welch two-sample t-test: statistic, Welch–Satterthwaite df, two-sided p.
 *
 * # Safety
 * `a` and `b` must hold `na` and `nb` doubles; outputs must be writable.
 */
int32_t mamnet_welch(const double *a,
                     size_t na,
                     const double *b,
                     size_t nb,
                     double *t,
                     double *df,
                     double *p);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MAMNET_H */
