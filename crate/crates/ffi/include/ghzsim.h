#ifndef GHZSIM_H
#define GHZSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GhzsimStatus {
  GHZSIM_STATUS_OK = 0,
  GHZSIM_STATUS_NULL_POINTER = 1,
  GHZSIM_STATUS_INVALID_UTF8 = 2,
  GHZSIM_STATUS_INVALID_ANGLE = 3,
  GHZSIM_STATUS_INVALID_CONFIG = 4,
  GHZSIM_STATUS_TOO_LARGE = 5,
  GHZSIM_STATUS_NOT_EQUATORIAL = 6,
  GHZSIM_STATUS_PRECISION_EXHAUSTED = 7,
  GHZSIM_STATUS_DEPTH_EXCEEDED = 8,
  GHZSIM_STATUS_TAPE_EXHAUSTED = 9,
  GHZSIM_STATUS_INSUFFICIENT_SAMPLES = 10,
  GHZSIM_STATUS_IO = 11,
  GHZSIM_STATUS_INTERNAL = 12,
} GhzsimStatus;

typedef enum GhzsimUnit {
  /**
   * Angles are multiples of π.
   */
  GHZSIM_UNIT_PI = 0,
  GHZSIM_UNIT_RADIANS = 1,
} GhzsimUnit;

typedef enum GhzsimVariant {
  GHZSIM_VARIANT_SEQUENTIAL = 0,
  GHZSIM_VARIANT_DOUBLING = 1,
  GHZSIM_VARIANT_CONSTANT_ROUND = 2,
  GHZSIM_VARIANT_PARALLEL = 3,
  GHZSIM_VARIANT_EQUATORIAL = 4,
} GhzsimVariant;

/**
 * Opaque handle to a validated measurement set.
 */
typedef struct GhzsimSet GhzsimSet;

/**
 * Costs of a single run.
 */
typedef struct GhzsimTrialStats {
  uint64_t random_bits;
  uint64_t bits_to_leader;
  uint64_t bits_from_leader;
  uint32_t outer_rounds;
  uint32_t inner_k_final;
  uint32_t bernoulli_k_final;
  uint64_t parallel_time_steps;
} GhzsimTrialStats;

/**
 * Means over a batch of runs.
 */
typedef struct GhzsimSampleSummary {
  uint64_t trials;
  double mean_random_bits;
  double mean_total_bits;
  double mean_outer_rounds;
  double mean_parallel_time_steps;
  /**
   * 1 when every applicable budget check passed.
   */
  int32_t budget_pass;
} GhzsimSampleSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a measurement set from `n` pairs of angle literals such as `"1/3"`
 * or `"0.25"`.
 *
 * # Safety
 * `thetas` and `phis` must each point to `n` valid NUL-terminated strings;
 * `out` must be writable. The handle is released with [`ghzsim_set_free`].
 */
enum GhzsimStatus ghzsim_set_new(const char *const *thetas,
                                 const char *const *phis,
                                 size_t n,
                                 enum GhzsimUnit unit,
                                 struct GhzsimSet **out);

/**
 * # Safety
 * `set` must be null or a handle from [`ghzsim_set_new`] not yet freed.
 */
void ghzsim_set_free(struct GhzsimSet *set);

/**
 * Number of parties, 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t ghzsim_set_parties(const struct GhzsimSet *set);

/**
 * Exact probability of an outcome, rounded to double. Bit `j` of `mask` set
 * means party `j` (0-based) reads `−1`.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum GhzsimStatus ghzsim_oracle_prob(const struct GhzsimSet *set, uint64_t mask, double *out);

/**
 * One run with trial id `trial` under `seed`. Writes `n` entries of `±1`
 * to `outcome`; `stats` may be null.
 *
 * # Safety
 * `set` must be a live handle, `outcome` must have room for `n` values and
 * `stats` must be null or writable.
 */
enum GhzsimStatus ghzsim_run_trial(const struct GhzsimSet *set,
                                   enum GhzsimVariant variant,
                                   uint64_t seed,
                                   uint64_t trial,
                                   int8_t *outcome,
                                   struct GhzsimTrialStats *stats);

/**
 * Runs trials `0..trials` across the available cores. When `counts` is
 * non-null it receives `2^n` outcome counts indexed by mask, which requires
 * `n ≤ 16`. `summary` may be null.
 *
 * # Safety
 * `set` must be a live handle, `counts` null or room for `2^n` values and
 * `summary` null or writable.
 */
enum GhzsimStatus ghzsim_sample(const struct GhzsimSet *set,
                                enum GhzsimVariant variant,
                                uint64_t seed,
                                uint64_t trials,
                                uint64_t *counts,
                                struct GhzsimSampleSummary *summary);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *ghzsim_last_error(void);

/**
 * Static description of a status code.
 */
const char *ghzsim_status_string(enum GhzsimStatus status);

const char *ghzsim_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GHZSIM_H */
