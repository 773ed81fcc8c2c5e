#ifndef DAMAGE_IDENT_H
#define DAMAGE_IDENT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DiStatus {
  DI_STATUS_OK = 0,
  DI_STATUS_NULL_POINTER = 1,
  DI_STATUS_INVALID_ARGUMENT = 2,
  DI_STATUS_SIMULATION = 3,
  DI_STATUS_IO = 4,
  DI_STATUS_CALIBRATION = 5,
  DI_STATUS_INTERNAL = 6,
} DiStatus;

typedef struct DiContext DiContext;

typedef struct DiCurve DiCurve;

typedef struct DiReference DiReference;

/**
 * The six material parameters, in MPa and 1/mm where dimensional.
 */
typedef struct DiParams {
  double e;
  double nu;
  double sigf_bar;
  double k_bar;
  double sigf_bbar;
  double beta_bbar;
} DiParams;

typedef struct DiCurvePoint {
  double u;
  double load;
  double delta_l;
  double crack_open;
} DiCurvePoint;

typedef struct DiEvaluation {
  double value;
  /**
   * Nonzero when the constant penalty was assigned.
   */
  int32_t penalized;
  /**
   * Nonzero when the penalty came from a failed simulation.
   */
  int32_t solver_failure;
} DiEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t di_last_error(char *buf, uintptr_t len);

/**
 * Writes the default reference parameters to `out`.
 * `out` must be null or valid for writes.
 */
enum DiStatus di_params_reference(struct DiParams *out);

/**
 * Simulates the reference specimen with the default geometry, step and
 * feature settings.
 * `params` must be readable and `out` writable.
 */
enum DiStatus di_reference_generate(const struct DiParams *params, struct DiReference **out);

/**
 * Loads reference data, either bare or as written by the command-line tool.
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum DiStatus di_reference_load(const char *path, struct DiReference **out);

/**
 * Copy of the reference load-deflection curve.
 * `reference` must be a live handle and `out` writable.
 */
enum DiStatus di_reference_curve(const struct DiReference *reference, struct DiCurve **out);

/**
 * `reference` must be null or a handle not yet freed.
 */
void di_reference_free(struct DiReference *reference);

/**
 * Notched three-point bending up to `u_max` mm.
 * `params` must be readable and `out` writable.
 */
enum DiStatus di_simulate_bending(const struct DiParams *params,
                                  double u_max,
                                  struct DiCurve **out);

/**
 * Uniaxial bar with one cohesive section up to `u_max` mm.
 * `params` must be readable and `out` writable.
 */
enum DiStatus di_simulate_tensile(const struct DiParams *params,
                                  double u_max,
                                  struct DiCurve **out);

/**
 * Number of points of `curve`, 0 for a null handle.
 * `curve` must be null or a live handle.
 */
uintptr_t di_curve_len(const struct DiCurve *curve);

/**
 * `curve` must be a live handle and `out` writable.
 */
enum DiStatus di_curve_point(const struct DiCurve *curve,
                             uintptr_t index,
                             struct DiCurvePoint *out);

/**
 * `curve` must be null or a handle not yet freed.
 */
void di_curve_free(struct DiCurve *curve);

/**
 * Objective of `stage` (1, 2 or 3) with the parameters outside the stage
 * held at `fixed`, under the default bounds.
 * `reference` must be a live handle, `fixed` and `weights` (two values)
 * readable, and `out` writable.
 */
enum DiStatus di_context_new(const struct DiReference *reference,
                             uint32_t stage,
                             const struct DiParams *fixed,
                             const double *weights,
                             struct DiContext **out);

/**
 * Objective value at the free pair `(a, b)` in physical units.
 * `ctx` must be a live handle and `out` writable.
 */
enum DiStatus di_context_evaluate(const struct DiContext *ctx,
                                  double a,
                                  double b,
                                  struct DiEvaluation *out);

/**
 * `ctx` must be null or a handle not yet freed.
 */
void di_context_free(struct DiContext *ctx);

/**
 * Calibrates the weights of all three stages around the reference
 * parameters from `samples` Latin-hypercube points each. Writes six values:
 * the pairs of stages 1, 2 and 3.
 * `reference` must be a live handle and `out` writable for six values.
 */
enum DiStatus di_calibrate_weights(const struct DiReference *reference,
                                   uintptr_t samples,
                                   uint64_t seed,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAMAGE_IDENT_H */
