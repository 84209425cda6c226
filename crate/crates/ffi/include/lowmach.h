#ifndef LOWMACH_H
#define LOWMACH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LmStatus {
  LM_STATUS_OK = 0,
  LM_STATUS_NULL_POINTER = 1,
  LM_STATUS_INVALID_ARGUMENT = 2,
  LM_STATUS_CONFIG = 3,
  /**
   * The state lost positivity; the handle keeps the last valid state.
   */
  LM_STATUS_BREAKDOWN = 4,
  LM_STATUS_IO = 5,
  LM_STATUS_BUFFER_TOO_SMALL = 6,
  LM_STATUS_INTERNAL = 7,
} LmStatus;

/**
 * Opaque simulation handle.
 */
typedef struct LmSimulation LmSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len` bytes. Returns the full
 * message length without the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t lm_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lm_version(void);

/**
 * Create a simulation from INI text that names its case in `[case]`.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LmStatus lm_simulation_new(const char *config, struct LmSimulation **out);

/**
 * Create a simulation of a built-in case with its default settings.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LmStatus lm_simulation_new_case(const char *name, struct LmSimulation **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from `lm_simulation_new*` and not be used afterwards.
 */
void lm_simulation_free(struct LmSimulation *sim);

/**
 * Grid size in cells.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LmStatus lm_simulation_size(struct LmSimulation *sim, size_t *ni, size_t *nj);

/**
 * Current simulation time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a valid handle.
 */
double lm_simulation_time(const struct LmSimulation *sim);

/**
 * CFL-limited step for the current state.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LmStatus lm_simulation_stable_dt(struct LmSimulation *sim, double *dt);

/**
 * Advance by one step of length `dt`.
 *
 * # Safety
 * `sim` must be a valid handle.
 */
enum LmStatus lm_simulation_step(struct LmSimulation *sim, double dt);

/**
 * Advance with CFL-controlled steps until `t_end`, or until the density
 * change rate drops below the configured steady tolerance.
 *
 * # Safety
 * `sim` must be a valid handle.
 */
enum LmStatus lm_simulation_advance(struct LmSimulation *sim, double t_end);

/**
 * Cell of the last breakdown on this handle.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LmStatus lm_simulation_breakdown_cell(struct LmSimulation *sim, size_t *i, size_t *j);

/**
 * Write `rho, u, v, p` per cell into `buf`, which holds `len` doubles
 * (at least `4 * ni * nj`).
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum LmStatus lm_simulation_primitives(struct LmSimulation *sim, double *buf, size_t len);

/**
 * Write `x, y` per cell center into `buf` (at least `2 * ni * nj`).
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum LmStatus lm_simulation_cell_centers(struct LmSimulation *sim, double *buf, size_t len);

/**
 * Domain integrals of mass, x/y momentum and energy into `out[4]`.
 *
 * # Safety
 * `out` must point to 4 writable doubles.
 */
enum LmStatus lm_simulation_totals(struct LmSimulation *sim, double *out);

/**
 * Largest stable step on the convex hull of the periodic advection
 * spectrum with upwind weight `eps` on `n` cells. `method` is one of
 * euler, heun2, heun3, rk4, ab1 .. ab5.
 *
 * # Safety
 * `method` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LmStatus lm_max_cfl(const char *method, double eps, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOWMACH_H */
