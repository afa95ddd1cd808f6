#ifndef FRACPME_H
#define FRACPME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>

typedef enum FracpmeStatus {
  FRACPME_STATUS_OK = 0,
  FRACPME_STATUS_NULL_POINTER = 1,
  FRACPME_STATUS_INVALID_PARAMS = 2,
  FRACPME_STATUS_BELOW_THRESHOLD = 3,
  FRACPME_STATUS_NO_CONVERGENCE = 4,
  FRACPME_STATUS_BUFFER_TOO_SMALL = 5,
  FRACPME_STATUS_PANIC = 6,
  FRACPME_STATUS_INTERNAL = 7,
} FracpmeStatus;

/**
 * Problem parameters and solver settings.
 */
typedef struct FracpmeParams FracpmeParams;

/**
 * A converged self-similar profile.
 */
typedef struct FracpmeSolution FracpmeSolution;

/**
 * Closed-form bounds at one `beta`. Fields undefined below `beta0` are NaN.
 */
typedef struct FracpmeBounds {
  double beta;
  double beta0;
  double eta1;
  double eta2;
  double f_plus;
  double f_minus;
} FracpmeBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * New parameter handle with default solver settings, or null if `alpha` is
 * outside `(0, 1)` or `m ≤ 1`.
 */
struct FracpmeParams *fracpme_params_new(double alpha, double m);

/**
 * # Safety
 * `params` must be null or come from [`fracpme_params_new`], freed once.
 */
void fracpme_params_free(struct FracpmeParams *params);

/**
 * Grid step of the solve; zero or negative restores the default.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
enum FracpmeStatus fracpme_params_set_grid_step(struct FracpmeParams *params, double grid_step);

/**
 * # Safety
 * `params` must be null or a live handle.
 */
enum FracpmeStatus fracpme_params_set_tolerances(struct FracpmeParams *params,
                                                 double picard_tol,
                                                 double shoot_tol);

/**
 * # Safety
 * `params` must be null or a live handle; `out` must be null or writable.
 */
enum FracpmeStatus fracpme_beta0(const struct FracpmeParams *params, double *out);

/**
 * # Safety
 * `params` must be null or a live handle; `out` must be null or writable.
 */
enum FracpmeStatus fracpme_bounds(const struct FracpmeParams *params,
                                  double beta,
                                  struct FracpmeBounds *out);

/**
 * Finds `beta*` and the profile. On success `*out` owns a new solution.
 *
 * # Safety
 * `params` must be null or a live handle; `out` must be null or writable.
 */
enum FracpmeStatus fracpme_solve(const struct FracpmeParams *params, struct FracpmeSolution **out);

/**
 * # Safety
 * `solution` must be null or come from [`fracpme_solve`], freed once.
 */
void fracpme_solution_free(struct FracpmeSolution *solution);

/**
 * NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
double fracpme_solution_beta_star(const struct FracpmeSolution *solution);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
double fracpme_solution_eta_star(const struct FracpmeSolution *solution);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
double fracpme_solution_flux_residual(const struct FracpmeSolution *solution);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
double fracpme_solution_beta0(const struct FracpmeSolution *solution);

/**
 * Number of profile nodes; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t fracpme_solution_len(const struct FracpmeSolution *solution);

/**
 * Copies nodes and `U` values into buffers of `len` doubles each. Either
 * buffer may be null to skip it.
 *
 * # Safety
 * `solution` must be null or a live handle; non-null buffers must hold
 * `len` doubles.
 */
enum FracpmeStatus fracpme_solution_copy_profile(const struct FracpmeSolution *solution,
                                                 double *eta,
                                                 double *u,
                                                 size_t len);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *fracpme_last_error_message(void);

/**
 * Library version, NUL-terminated and static.
 */
const char *fracpme_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACPME_H */
