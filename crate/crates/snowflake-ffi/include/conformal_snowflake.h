#ifndef CONFORMAL_SNOWFLAKE_H
#define CONFORMAL_SNOWFLAKE_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum CsnowStatus {
  CSNOW_STATUS_OK = 0,
  CSNOW_STATUS_NULL_POINTER = 1,
  CSNOW_STATUS_INVALID_ARGUMENT = 2,
  CSNOW_STATUS_DOMAIN = 3,
  CSNOW_STATUS_DEGENERATE = 4,
  CSNOW_STATUS_NO_CONVERGENCE = 5,
  CSNOW_STATUS_VACUOUS_BOUND = 6,
  CSNOW_STATUS_INTERNAL = 7,
} CsnowStatus;

/**
 * Opaque slit building block.
 */
typedef struct CsnowBlock CsnowBlock;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a slit block with slit length `l` and scale `s`; writes an owned
 * handle to `out`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CsnowStatus csnow_block_new(double l, double s, struct CsnowBlock **out);

/**
 * Release a block handle; `block` may be null.
 *
 * # Safety
 * `block` must have come from `csnow_block_new` and not be freed twice.
 */
void csnow_block_free(struct CsnowBlock *block);

/**
 * Logarithmic capacity of the block.
 *
 * # Safety
 * `block` and `out` must be valid pointers.
 */
enum CsnowStatus csnow_block_capacity(const struct CsnowBlock *block, double *out);

/**
 * Positive solution of (ψ(x))^k = x.
 *
 * # Safety
 * `block` and `out` must be valid pointers.
 */
enum CsnowStatus csnow_critical_radius(const struct CsnowBlock *block, uint32_t k, double *out);

/**
 * Dominant eigenvalue of the N×M discretized operator at exponent `t`;
 * writes λ and log_k λ.
 *
 * # Safety
 * `block`, `out_lambda`, and `out_log_k_lambda` must be valid pointers.
 */
enum CsnowStatus csnow_eigenvalue(const struct CsnowBlock *block,
                                  uint32_t k,
                                  double t,
                                  uintptr_t n_grid,
                                  uintptr_t m_angles,
                                  double *out_lambda,
                                  double *out_log_k_lambda);

/**
 * Lower-bound certificate as a JSON document (heap-allocated C string).
 * `mode`: 0 = paper constants, 1 = heuristic budgets.  On a vacuous bound
 * the certificate JSON is still written and `VACUOUS_BOUND` is returned.
 *
 * # Safety
 * `block` and `out_json` must be valid pointers; free the string with
 * `csnow_string_free`.
 */
enum CsnowStatus csnow_certify_json(const struct CsnowBlock *block,
                                    uint32_t k,
                                    double t,
                                    uintptr_t radial_points,
                                    uint32_t mode,
                                    char **out_json);

/**
 * Release a string returned by this library; `s` may be null.
 *
 * # Safety
 * `s` must have been produced by this library and not freed before.
 */
void csnow_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFORMAL_SNOWFLAKE_H */
