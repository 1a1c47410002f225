#ifndef LEVINSON_GRAPH_H
#define LEVINSON_GRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LgMethod {
  /**
   * Argument principle on the rational form.
   */
  LG_METHOD_ROOTS = 0,
  /**
   * Adaptive phase tracking around the circle.
   */
  LG_METHOD_PHASE = 1,
} LgMethod;

typedef enum LgStatus {
  LG_STATUS_OK = 0,
  LG_STATUS_NULL_POINTER = 1,
  /**
   * The instance or an argument is malformed.
   */
  LG_STATUS_INVALID_INPUT = 2,
  LG_STATUS_IO = 3,
  /**
   * A numerical routine failed.
   */
  LG_STATUS_NUMERIC = 4,
  /**
   * The result is numerically ambiguous (root on the unit circle, phase
   * refinement exhausted).
   */
  LG_STATUS_AMBIGUOUS = 5,
  LG_STATUS_PANIC = 6,
} LgStatus;

/**
 * Opaque instance handle.
 */
typedef struct LgGraph LgGraph;

/**
 * Outcome of `lg_verify`. Counts refer to the reduced instance.
 */
typedef struct LgReport {
  bool holds;
  bool ambiguous;
  size_t peels;
  bool counts_valid;
  size_t m;
  size_t n_b;
  size_t n_h;
  size_t n_c;
  bool w_phase_valid;
  int64_t w_phase;
  bool w_roots_valid;
  int64_t w_roots;
  /**
   * `2(m - n_b - n_c) - n_h`; meaningful when `counts_valid`.
   */
  int64_t rhs;
} LgReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds an instance from `a`, `b` (length `m`) and row-major `D` (`m * m`).
 * The imaginary arrays may be null for real weights; the real arrays may be
 * null only when `m == 0`.
 *
 * # Safety
 * Non-null array pointers must be valid for the stated lengths; `out` must be
 * writable.
 */
enum LgStatus lg_graph_new(double a,
                           size_t m,
                           const double *b_re,
                           const double *b_im,
                           const double *d_re,
                           const double *d_im,
                           struct LgGraph **out);

/**
 * Loads a JSON instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LgStatus lg_graph_from_file(const char *path, struct LgGraph **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `graph` must come from this library and not be freed twice.
 */
void lg_graph_free(struct LgGraph *graph);

/**
 * Number of internal vertices, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t lg_graph_m(const struct LgGraph *graph);

/**
 * Checks the Levinson identity. `LG_STATUS_OK` is returned whenever a report
 * was produced, even if the identity does not hold.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum LgStatus lg_verify(const struct LgGraph *graph, struct LgReport *out);

/**
 * `R(e^{ik})`.
 *
 * # Safety
 * `graph` must be a live handle; `re` and `im` writable.
 */
enum LgStatus lg_reflection(const struct LgGraph *graph, double k, double *re, double *im);

/**
 * Winding number of `R` on the unit circle, after degenerate reduction.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum LgStatus lg_winding(const struct LgGraph *graph, enum LgMethod method, int64_t *out);

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *lg_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *lg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVINSON_GRAPH_H */
