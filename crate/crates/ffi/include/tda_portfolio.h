#ifndef TDA_PORTFOLIO_H
#define TDA_PORTFOLIO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TdaStatus {
  TDA_STATUS_OK = 0,
  TDA_STATUS_NULL_POINTER = 1,
  TDA_STATUS_INVALID_ARGUMENT = 2,
  TDA_STATUS_INSUFFICIENT_DATA = 3,
  TDA_STATUS_OUT_OF_RANGE = 4,
  TDA_STATUS_BUFFER_TOO_SMALL = 5,
  TDA_STATUS_PANIC = 6,
} TdaStatus;

typedef enum TdaTransform {
  TDA_TRANSFORM_LOG_PRICE = 0,
  TDA_TRANSFORM_RAW_PRICE = 1,
  TDA_TRANSFORM_LOG_RETURN = 2,
} TdaTransform;

typedef enum TdaAllocationMode {
  TDA_ALLOCATION_MODE_NORMALIZED = 0,
  TDA_ALLOCATION_MODE_PAPER_LITERAL = 1,
} TdaAllocationMode;

/**
 * Opaque persistence diagram.
 */
typedef struct TdaDiagram TdaDiagram;

/**
 * Opaque persistence landscape.
 */
typedef struct TdaLandscape TdaLandscape;

/**
 * One persistence interval; `death` is `INFINITY` for essential classes.
 */
typedef struct TdaPair {
  uint32_t dimension;
  double birth;
  double death;
} TdaPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *tda_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *tda_version(void);

/**
 * Rips persistence (H0 and H1) of `n_points` points in `dim` dimensions,
 * stored row-major in `coords`. A negative `threshold` uses the largest
 * pairwise distance.
 *
 * # Safety
 * `coords` must hold `n_points * dim` doubles; `out` must be writable.
 */
enum TdaStatus tda_diagram_from_points(const double *coords,
                                       size_t n_points,
                                       size_t dim,
                                       double threshold,
                                       struct TdaDiagram **out);

/**
 * # Safety
 * `diagram` must be null or a handle from this library not yet freed.
 */
void tda_diagram_free(struct TdaDiagram *diagram);

/**
 * Number of pairs in `diagram`, 0 for a null handle.
 *
 * # Safety
 * `diagram` must be null or a live handle.
 */
size_t tda_diagram_len(const struct TdaDiagram *diagram);

/**
 * # Safety
 * `diagram` must be a live handle and `out` writable.
 */
enum TdaStatus tda_diagram_pair(const struct TdaDiagram *diagram,
                                size_t index,
                                struct TdaPair *out);

/**
 * Landscape of the finite intervals of one homology dimension.
 *
 * # Safety
 * `diagram` must be a live handle and `out` writable.
 */
enum TdaStatus tda_diagram_landscape(const struct TdaDiagram *diagram,
                                     uint32_t dimension,
                                     struct TdaLandscape **out);

/**
 * Landscape of `n` finite intervals `(births[i], deaths[i])`.
 *
 * # Safety
 * `births` and `deaths` must hold `n` doubles; `out` must be writable.
 */
enum TdaStatus tda_landscape_from_intervals(const double *births,
                                            const double *deaths,
                                            size_t n,
                                            struct TdaLandscape **out);

/**
 * # Safety
 * `landscape` must be null or a handle from this library not yet freed.
 */
void tda_landscape_free(struct TdaLandscape *landscape);

/**
 * Number of nonzero levels, 0 for a null handle.
 *
 * # Safety
 * `landscape` must be null or a live handle.
 */
size_t tda_landscape_depth(const struct TdaLandscape *landscape);

/**
 * `λ_k(x)` with `k` counted from 1.
 *
 * # Safety
 * `landscape` must be a live handle and `out` writable.
 */
enum TdaStatus tda_landscape_eval(const struct TdaLandscape *landscape,
                                  size_t k,
                                  double x,
                                  double *out);

/**
 * Exact `Lp` norm, `p >= 1`.
 *
 * # Safety
 * `landscape` must be a live handle and `out` writable.
 */
enum TdaStatus tda_landscape_norm(const struct TdaLandscape *landscape, double p, double *out);

/**
 * H1 landscape norms of every embedding window of a daily close series.
 * `transform` is one of the `TdaTransform` values.
 *
 * Writes one value per window into `out`. If `capacity` is too small
 * nothing is written, `*written` holds the required length and the call
 * returns `TDA_STATUS_BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `closes` must hold `n` doubles, `out` must have room for `capacity`
 * doubles and `written` must be writable.
 */
enum TdaStatus tda_norm_series(const double *closes,
                               size_t n,
                               size_t dimension,
                               size_t window,
                               uint32_t transform,
                               double p,
                               double *out,
                               size_t capacity,
                               size_t *written);

/**
 * Portfolio weights for `n` composite scores; negative scores get weight 0.
 * `mode` is one of the `TdaAllocationMode` values.
 *
 * # Safety
 * `scores` must hold `n` doubles and `weights` must have room for `n`.
 */
enum TdaStatus tda_allocate(const double *scores, size_t n, uint32_t mode, double *weights);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDA_PORTFOLIO_H */
