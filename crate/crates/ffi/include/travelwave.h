#ifndef TRAVELWAVE_H
#define TRAVELWAVE_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible entry point.
 */
typedef enum TwStatus {
  TW_STATUS_OK = 0,
  TW_STATUS_NULL_POINTER = 1,
  TW_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid configuration, grid or initial guess.
   */
  TW_STATUS_CONFIG = 3,
  /**
   * A buffer length does not match the state dimension.
   */
  TW_STATUS_LENGTH_MISMATCH = 4,
  /**
   * A solver, extrapolation or eigensolver failure.
   */
  TW_STATUS_NUMERICAL = 5,
  TW_STATUS_IO = 6,
  TW_STATUS_INDEX_OUT_OF_RANGE = 7,
  /**
   * A panic was caught at the boundary; the handle should be discarded.
   */
  TW_STATUS_PANIC = 8,
} TwStatus;

/**
 * Which linearized map [`tw_experiment_spectrum`] analyses.
 */
typedef enum TwOperator {
  /**
   * `L^{-1} N'(u)`, the linearization of the plain fixed-point map.
   */
  TW_OPERATOR_CLASSICAL = 0,
  /**
   * The linearization of the configured stabilized stepper.
   */
  TW_OPERATOR_STABILIZED = 1,
} TwOperator;

/**
 * Why an iteration stopped.
 */
typedef enum TwTermination {
  TW_TERMINATION_CONVERGED = 0,
  TW_TERMINATION_MAX_ITERS = 1,
  TW_TERMINATION_DIVERGED = 2,
  TW_TERMINATION_NUMERICAL_BREAKDOWN = 3,
} TwTermination;

/**
 * A parsed configuration together with its discretized model.
 */
typedef struct TwExperiment TwExperiment;

/**
 * A finished solve: the trace and the final state.
 */
typedef struct TwSolution TwSolution;

/**
 * Totals of a finished solve.
 */
typedef struct TwSummary {
  size_t iterations;
  double final_res;
  enum TwTermination reason;
  /**
   * Nonzero when Anderson mixing reported an ill-conditioned system.
   */
  uint8_t ill_conditioned;
} TwSummary;

/**
 * One trace row.
 */
typedef struct TwTraceRow {
  size_t iter;
  double res;
  double diff;
  double sfe;
  double seconds;
} TwTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *tw_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *tw_version(void);

/**
 * Parse a TOML experiment description and build its model.
 *
 * # Safety
 * `toml` must be a nul-terminated string and `out` writable.
 */
enum TwStatus tw_experiment_from_toml(const char *toml, struct TwExperiment **out);

/**
 * # Safety
 * `exp` must be null or a handle from [`tw_experiment_from_toml`] that has
 * not been freed.
 */
void tw_experiment_free(struct TwExperiment *exp);

/**
 * Length of a state vector of the experiment's model.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` writable.
 */
enum TwStatus tw_experiment_dim(const struct TwExperiment *exp, size_t *out);

/**
 * Write the configured initial guess into `buf` (length `len`).
 *
 * # Safety
 * `exp` must be a live experiment handle and `buf` hold `len` doubles.
 */
enum TwStatus tw_experiment_initial_guess(const struct TwExperiment *exp, double *buf, size_t len);

/**
 * `||L u - N(u)||` at `state`.
 *
 * # Safety
 * `exp` must be a live experiment handle, `state` hold `len` doubles and
 * `out` be writable.
 */
enum TwStatus tw_experiment_residual(const struct TwExperiment *exp,
                                     const double *state,
                                     size_t len,
                                     double *out);

/**
 * Solve from the configured initial guess with the configured accelerator.
 * A run that stops without converging still succeeds; inspect its summary.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` writable.
 */
enum TwStatus tw_experiment_solve(const struct TwExperiment *exp, struct TwSolution **out);

/**
 * Solve from the caller's initial iterate `u0` (length `len`).
 *
 * # Safety
 * `exp` must be a live experiment handle, `u0` hold `len` doubles and `out`
 * be writable.
 */
enum TwStatus tw_experiment_solve_from(const struct TwExperiment *exp,
                                       const double *u0,
                                       size_t len,
                                       struct TwSolution **out);

/**
 * Leading `count` eigenvalues (by modulus) of a linearized map at `state`,
 * written as real parts to `re` and imaginary parts to `im`.
 *
 * # Safety
 * `exp` must be a live experiment handle, `state` hold `len` doubles and
 * `re`, `im` hold `count` doubles each.
 */
enum TwStatus tw_experiment_spectrum(const struct TwExperiment *exp,
                                     const double *state,
                                     size_t len,
                                     enum TwOperator which,
                                     size_t count,
                                     double *re,
                                     double *im);

/**
 * # Safety
 * `sol` must be null or a live solution handle.
 */
void tw_solution_free(struct TwSolution *sol);

/**
 * # Safety
 * `sol` must be a live solution handle and `out` writable.
 */
enum TwStatus tw_solution_summary(const struct TwSolution *sol, struct TwSummary *out);

/**
 * Number of trace rows (iterations plus the initial row).
 *
 * # Safety
 * `sol` must be a live solution handle and `out` writable.
 */
enum TwStatus tw_solution_row_count(const struct TwSolution *sol, size_t *out);

/**
 * # Safety
 * `sol` must be a live solution handle and `out` writable.
 */
enum TwStatus tw_solution_row(const struct TwSolution *sol, size_t index, struct TwTraceRow *out);

/**
 * Copy the final state into `buf` (length `len`).
 *
 * # Safety
 * `sol` must be a live solution handle and `buf` hold `len` doubles.
 */
enum TwStatus tw_solution_state(const struct TwSolution *sol, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAVELWAVE_H */
