#ifndef SVLASOV_H
#define SVLASOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every function.
 */
typedef enum SvStatus {
  SV_STATUS_OK = 0,
  SV_STATUS_NULL_POINTER = 1,
  SV_STATUS_INVALID_UTF8 = 2,
  SV_STATUS_CONFIG_ERROR = 3,
  SV_STATUS_NUMERICAL_ABORT = 4,
  SV_STATUS_BUFFER_TOO_SMALL = 5,
  SV_STATUS_PANIC = 6,
} SvStatus;

/**
 * Opaque simulation handle.
 */
typedef struct SvSimulation SvSimulation;

/**
 * Diagnostics of the latest step. `has_potential` is 0 when the field has
 * no potential, in which case `potential` and `total` are NaN.
 */
typedef struct SvDiagnostics {
  double t;
  double mass;
  double l1;
  double l2;
  double momentum;
  double kinetic;
  double potential;
  double total;
  double half_width;
  int32_t has_potential;
  int32_t grew;
} SvDiagnostics;

/**
 * Current mesh; the value table holds `nx * nv` doubles, position-major.
 */
typedef struct SvGridDims {
  size_t nx;
  size_t nv;
  double length;
  double dx;
  double dv;
  double half_width;
  size_t step;
  size_t steps;
} SvGridDims;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sv_last_error_message(void);

/**
 * Create a simulation for sample `sample` (path seed `seed + sample`) of
 * the configuration in `config_toml`.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SvStatus sv_simulation_new(const char *config_toml,
                                uint64_t sample,
                                struct SvSimulation **out);

/**
 * Advance one step. `advanced` receives 1, or 0 when the run was already
 * complete.
 *
 * # Safety
 * `handle` must come from `sv_simulation_new`; `advanced` may be null.
 */
enum SvStatus sv_simulation_step(struct SvSimulation *handle, int32_t *advanced);

/**
 * Step until the final time.
 *
 * # Safety
 * `handle` must come from `sv_simulation_new`.
 */
enum SvStatus sv_simulation_run(struct SvSimulation *handle);

/**
 * Diagnostics after the latest step (the initial record before any step).
 *
 * # Safety
 * `handle` must come from `sv_simulation_new`; `out` must be valid.
 */
enum SvStatus sv_simulation_diagnostics(const struct SvSimulation *handle,
                                        struct SvDiagnostics *out);

/**
 * Current mesh dimensions and step counters.
 *
 * # Safety
 * `handle` must come from `sv_simulation_new`; `out` must be valid.
 */
enum SvStatus sv_simulation_grid(const struct SvSimulation *handle, struct SvGridDims *out);

/**
 * Copy the `nx * nv` nodal values into `buf` (capacity `len` doubles).
 *
 * # Safety
 * `handle` must come from `sv_simulation_new`; `buf` must hold `len` doubles.
 */
enum SvStatus sv_simulation_copy_values(const struct SvSimulation *handle, double *buf, size_t len);

/**
 * Release a simulation. Null is ignored.
 *
 * # Safety
 * `handle` must come from `sv_simulation_new` and not be used afterwards.
 */
void sv_simulation_free(struct SvSimulation *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SVLASOV_H */
