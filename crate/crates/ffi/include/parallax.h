#ifndef PARALLAX_H
#define PARALLAX_H

#include <stdbool.h>
#include <stddef.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum PxStatus {
  PX_STATUS_OK = 0,
  PX_STATUS_NULL_POINTER = 1,
  PX_STATUS_INVALID_ARGUMENT = 2,
  PX_STATUS_IMPROPER_POSTERIOR = 3,
  PX_STATUS_NOT_APPLICABLE = 4,
  PX_STATUS_NUMERICAL_FAILURE = 5,
  PX_STATUS_PANIC = 6,
} PxStatus;

/**
 * Tail relation between two priors.
 */
typedef enum PxDominance {
  PX_DOMINANCE_FIRST_DOMINATES = 0,
  PX_DOMINANCE_SECOND_DOMINATES = 1,
  PX_DOMINANCE_EQUIVALENT = 2,
} PxDominance;

/**
 * Opaque handle to a normalized posterior on a quadrature grid.
 */
typedef struct PxGrid PxGrid;

/**
 * Opaque prior handle.
 */
typedef struct PxPrior PxPrior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread; empty after a
 * successful call. The pointer stays valid until the next call into this
 * library from the same thread.
 */
const char *px_last_error(void);

/**
 * Creates a prior from a family name and `n_params` (key, value) pairs.
 *
 * # Safety
 * `name` must be a NUL-terminated string. When `n_params > 0`, `keys` and
 * `values` must point to `n_params` valid entries. `out` must be writable.
 */
enum PxStatus px_prior_new(const char *name,
                           const char *const *keys,
                           const double *values,
                           size_t n_params,
                           struct PxPrior **out);

/**
 * Releases a prior; null is ignored.
 *
 * # Safety
 * `prior` must come from [`px_prior_new`] and not have been freed.
 */
void px_prior_free(struct PxPrior *prior);

/**
 * Natural log of the normalized prior density at distance `r`.
 *
 * # Safety
 * `prior` must be a live handle and `out` writable.
 */
enum PxStatus px_log_prior_density(const struct PxPrior *prior, double r, double *out);

/**
 * Builds the normalized posterior of distance for parallax `omega` with
 * standard error `sigma_omega` (both in arcseconds).
 *
 * # Safety
 * `prior` must be a live handle and `out` writable.
 */
enum PxStatus px_posterior_quadrature(const struct PxPrior *prior,
                                      double omega,
                                      double sigma_omega,
                                      struct PxGrid **out);

/**
 * Posterior distance quantile at probability `p` in (0, 1).
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum PxStatus px_grid_quantile(const struct PxGrid *grid, double p, double *out);

/**
 * Posterior probability that the distance exceeds `c`.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum PxStatus px_grid_tail_probability(const struct PxGrid *grid, double c, double *out);

/**
 * Releases a posterior grid; null is ignored.
 *
 * # Safety
 * `grid` must come from [`px_posterior_quadrature`] and not have been freed.
 */
void px_grid_free(struct PxGrid *grid);

/**
 * Inverse-parallax distance; `PX_STATUS_NOT_APPLICABLE` when `omega <= 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PxStatus px_mle_distance(double omega, double sigma_omega, double *out);

/**
 * Minimum expected loss distance `omega / (omega^2 + sigma_omega^2)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PxStatus px_melo_distance(double omega, double sigma_omega, double *out);

/**
 * Tail dominance between two priors.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum PxStatus px_dominance(const struct PxPrior *first,
                           const struct PxPrior *second,
                           enum PxDominance *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARALLAX_H */
