#ifndef WBARY_H
#define WBARY_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WB_MAP_GAUSSIAN 0

#define WB_MAP_SRHT 1

#define WB_POLICY_P2 0

#define WB_POLICY_KIRSZBRAUN 1

#define WB_POLICY_OPTIMAL 2

/**
 * Result codes. Zero is success.
 */
typedef enum WbStatus {
  WB_STATUS_OK = 0,
  WB_STATUS_NULL_POINTER = 1,
  WB_STATUS_INVALID_ARGUMENT = 2,
  WB_STATUS_INPUT_ERROR = 3,
  WB_STATUS_NUMERICAL_FAILURE = 4,
  WB_STATUS_BUFFER_TOO_SMALL = 5,
  WB_STATUS_PANIC = 6,
} WbStatus;

/**
 * A solved barycenter.
 */
typedef struct WbBarycenter WbBarycenter;

/**
 * A list of distributions sharing one dimension.
 */
typedef struct WbDistributionSet WbDistributionSet;

/**
 * Solver settings. Obtain defaults from [`wb_solver_params_default`].
 */
typedef struct WbSolverParams {
  size_t support_size;
  double p;
  size_t max_iters;
  double rel_tol;
  uint64_t seed;
  size_t restarts;
} WbSolverParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *wb_last_error(void);

/**
 * An empty set for distributions in `R^dim`; null when `dim` is zero.
 */
struct WbDistributionSet *wb_distribution_set_new(size_t dim);

/**
 * Appends a distribution with `len` atoms stored row-major in `atoms`.
 * Weights are normalized if they sum to 1 within a small tolerance.
 *
 * # Safety
 * `set` must come from this library; `atoms` must hold `len * dim`
 * doubles and `weights` `len` doubles.
 */
enum WbStatus wb_distribution_set_push(struct WbDistributionSet *set,
                                       const double *atoms,
                                       const double *weights,
                                       size_t len);

/**
 * Number of distributions, or 0 for a null set.
 *
 * # Safety
 * `set` must be null or come from this library.
 */
size_t wb_distribution_set_len(const struct WbDistributionSet *set);

/**
 * # Safety
 * `set` must be null or come from this library, and not be used afterwards.
 */
void wb_distribution_set_free(struct WbDistributionSet *set);

/**
 * Reads `dist_id,weight,x_1,...,x_d` rows from a CSV file into a new set.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WbStatus wb_distribution_set_load_csv(const char *path, struct WbDistributionSet **out);

/**
 * `W_p` between two distributions in `R^dim`.
 *
 * # Safety
 * Atom arrays must hold `len * dim` doubles, weight arrays `len` doubles,
 * and `out` must be valid for writing.
 */
enum WbStatus wb_wasserstein(const double *a_atoms,
                             const double *a_weights,
                             size_t a_len,
                             const double *b_atoms,
                             const double *b_weights,
                             size_t b_len,
                             size_t dim,
                             double p,
                             double *out);

struct WbSolverParams wb_solver_params_default(size_t support_size, double p);

/**
 * Solves for a barycenter in the original dimension.
 *
 * # Safety
 * `set` and `params` must be valid; `out` must be valid for writing.
 */
enum WbStatus wb_solve_barycenter(const struct WbDistributionSet *set,
                                  const struct WbSolverParams *params,
                                  struct WbBarycenter **out);

/**
 * Projects to `m` dimensions with a `WB_MAP_*` map, solves there, and
 * rebuilds the support in the original dimension.
 *
 * # Safety
 * `set` and `params` must be valid; `out` must be valid for writing.
 */
enum WbStatus wb_reduce_solve(const struct WbDistributionSet *set,
                              const struct WbSolverParams *params,
                              uint32_t map_kind,
                              size_t m,
                              uint64_t map_seed,
                              struct WbBarycenter **out);

/**
 * Cost in the original dimension; NaN for a null handle.
 *
 * # Safety
 * `b` must be null or come from this library.
 */
double wb_barycenter_cost(const struct WbBarycenter *b);

/**
 * Cost among the projected points; NaN if the barycenter was not computed by projection.
 *
 * # Safety
 * `b` must be null or come from this library.
 */
double wb_barycenter_cost_low(const struct WbBarycenter *b);

/**
 * # Safety
 * `b` must be null or come from this library.
 */
size_t wb_barycenter_support_size(const struct WbBarycenter *b);

/**
 * # Safety
 * `b` must be null or come from this library.
 */
size_t wb_barycenter_dim(const struct WbBarycenter *b);

/**
 * Copies the support row-major into `out`, which holds `cap` doubles.
 *
 * # Safety
 * `b` must come from this library and `out` must hold `cap` doubles.
 */
enum WbStatus wb_barycenter_copy_support(const struct WbBarycenter *b, double *out, size_t cap);

/**
 * Copies the atom weights into `out`, which holds `cap` doubles.
 *
 * # Safety
 * `b` must come from this library and `out` must hold `cap` doubles.
 */
enum WbStatus wb_barycenter_copy_weights(const struct WbBarycenter *b, double *out, size_t cap);

/**
 * # Safety
 * `b` must be null or come from this library, and not be used afterwards.
 */
void wb_barycenter_free(struct WbBarycenter *b);

/**
 * Target dimension for a `WB_POLICY_*` formula. Pass `k = 0` when the
 * number of distributions is unknown (only the optimal policy accepts that).
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum WbStatus wb_jl_dimension(size_t n,
                              double eps,
                              double delta,
                              double p,
                              uint32_t policy,
                              size_t k,
                              double c_jl,
                              size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WBARY_H */
