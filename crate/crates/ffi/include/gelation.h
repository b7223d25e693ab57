#ifndef GELATION_H
#define GELATION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GelStatus {
  GEL_STATUS_OK = 0,
  GEL_STATUS_NULL_POINTER = 1,
  GEL_STATUS_INVALID_INPUT = 2,
  GEL_STATUS_NO_CONVERGENCE = 3,
  GEL_STATUS_SIZE_OVERFLOW = 4,
  GEL_STATUS_BUFFER_TOO_SMALL = 5,
  GEL_STATUS_PANIC = 6,
} GelStatus;

typedef enum GelPhase {
  GEL_PHASE_SUBCRITICAL = 0,
  GEL_PHASE_CRITICAL = 1,
  GEL_PHASE_SUPERCRITICAL = 2,
} GelPhase;

/**
 * Opaque model handle.
 */
typedef struct GelModel GelModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds and validates a model from a row-major `k x k` matrix and `k` densities.
 *
 * # Safety
 * `v` must point to `k * k` doubles, `alpha` to `k` doubles, `out` to writable storage.
 */
enum GelStatus gel_model_new(size_t k,
                             const double *v,
                             const double *alpha,
                             struct GelModel **out_model);

/**
 * Parses `{"k": .., "V": [[..]], "alpha": [..]}` and validates it.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out_model` must be writable.
 */
enum GelStatus gel_model_from_json(const char *json, struct GelModel **out_model);

/**
 * Releases a model. Null is a no-op.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void gel_model_free(struct GelModel *model);

/**
 * Number of types, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t gel_model_dim(const struct GelModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out_t` writable. Infinite when `V` is zero.
 */
enum GelStatus gel_gelation_time(const struct GelModel *model, double *out_t);

/**
 * Phase of `alpha t` and `rho(V D[alpha] t)`.
 *
 * # Safety
 * `model` must be a live handle; `out_phase` and `out_rho` writable.
 */
enum GelStatus gel_classify(const struct GelModel *model,
                            double t,
                            enum GelPhase *out_phase,
                            double *out_rho);

/**
 * Cluster density `zeta_x(t)` for the composition `x[0..k]`.
 *
 * # Safety
 * `x` must point to `k` values; `out_zeta` writable.
 */
enum GelStatus gel_zeta(const struct GelModel *model,
                        const uint32_t *x,
                        size_t k,
                        double t,
                        double *out_zeta);

/**
 * Truncated mass `sum_{|x| <= nmax} zeta_x(t) x` into `out_mass[0..k]`.
 *
 * # Safety
 * `out_mass` must hold `len` doubles; `out_tail` writable.
 */
enum GelStatus gel_total_mass(const struct GelModel *model,
                              double t,
                              size_t nmax,
                              double *out_mass,
                              size_t len,
                              double *out_tail);

/**
 * Smallest solution `y` of `y e^{-Vy} = alpha t e^{-V alpha t}`.
 * `out_iterations` and `out_residual` may be null.
 *
 * # Safety
 * `out_y` must hold `len` doubles; the optional out-pointers must be null or writable.
 */
enum GelStatus gel_invert(const struct GelModel *model,
                          double t,
                          double *out_y,
                          size_t len,
                          size_t *out_iterations,
                          double *out_residual);

/**
 * Extinction probabilities of the branching process with `M = V D[alpha] t`,
 * as the smallest fixed point of the offspring pgf.
 *
 * # Safety
 * `out_eta` must hold `len` doubles.
 */
enum GelStatus gel_extinction_fixed_point(const struct GelModel *model,
                                          double t,
                                          double *out_eta,
                                          size_t len);

/**
 * Extinction probabilities from the truncated cluster series.
 *
 * # Safety
 * `out_eta` must hold `len` doubles; `out_tail` writable.
 */
enum GelStatus gel_extinction_series(const struct GelModel *model,
                                     double t,
                                     size_t nmax,
                                     double *out_eta,
                                     size_t len,
                                     double *out_tail);

/**
 * Runs `replicas` lineages from one individual of `start_type` and counts
 * the extinct ones. Replica `r` uses seed `seed ^ r`.
 *
 * # Safety
 * `out_extinct` must be writable.
 */
enum GelStatus gel_simulate_branching(const struct GelModel *model,
                                      double t,
                                      size_t start_type,
                                      uint64_t seed,
                                      uint64_t replicas,
                                      uint64_t max_generations,
                                      uint64_t population_cap,
                                      uint64_t *out_extinct);

/**
 * Largest-component fraction of one sampled random multipartite graph.
 *
 * # Safety
 * `out_fraction` must be writable.
 */
enum GelStatus gel_sample_giant_fraction(const struct GelModel *model,
                                         double t,
                                         uint64_t n,
                                         uint64_t seed,
                                         double *out_fraction);

/**
 * Message for the last failed call on this thread, or null after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *gel_last_error(void);

/**
 * Library version, static storage.
 */
const char *gel_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GELATION_H */
