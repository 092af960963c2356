#ifndef FSISTAB_H
#define FSISTAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum FsiStatus {
  FSI_STATUS_OK = 0,
  FSI_STATUS_NULL_POINTER = 1,
  FSI_STATUS_INVALID_UTF8 = 2,
  // Malformed or out-of-range configuration.
  FSI_STATUS_CONFIG = 3,
  // A solve, step or analysis failed.
  FSI_STATUS_NUMERICAL = 4,
  // The run completed but its check did not pass.
  FSI_STATUS_CHECK_FAILED = 5,
  FSI_STATUS_BUFFER_TOO_SMALL = 6,
  FSI_STATUS_IO = 7,
  FSI_STATUS_PANIC = 8,
} FsiStatus;

// Opaque model handle.
typedef struct FsiModel FsiModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a model from `key = value` config text. On success `*out` owns the
// new handle.
//
// # Safety
// `config` must be a NUL-terminated string and `out` a valid pointer.
enum FsiStatus fsi_model_new(const char *config, struct FsiModel **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `model` must come from [`fsi_model_new`] and not be used afterwards.
void fsi_model_free(struct FsiModel *model);

// Number of unknowns of the reduced generator.
//
// # Safety
// `model` must be a live handle and `order` a valid pointer.
enum FsiStatus fsi_model_order(const struct FsiModel *model, uintptr_t *order);

// `‖A n0‖_H / ‖n0‖_H` for the model's generator.
//
// # Safety
// `model` must be a live handle and `residual` a valid pointer.
enum FsiStatus fsi_null_residual(const struct FsiModel *model, double *residual);

// Evolves the configured initial data over the configured horizon and
// writes the energy at every step, `E(0)` first. `*written` receives the
// sample count, `T/dt + 1`; when `capacity` is smaller nothing is copied and
// [`FsiStatus::BufferTooSmall`] is returned with `*written` set, so a caller
// may pass a null buffer with zero capacity to query the size.
//
// # Safety
// `model` must be a live handle, `written` a valid pointer and `energy`
// valid for `capacity` writes.
enum FsiStatus fsi_evolve_energy(const struct FsiModel *model,
                                 double *energy,
                                 uintptr_t capacity,
                                 uintptr_t *written);

// Runs a CLI subcommand (`simulate`, `spectrum`, `nullspace`, `decay`,
// `diagnose`, `selftest`) with config text, writing artifacts under
// `out_dir` when it is not null.
//
// # Safety
// `name` and `config` must be NUL-terminated strings; `out_dir` may be null.
enum FsiStatus fsi_run(const char *name, const char *config, const char *out_dir);

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call on the same thread.
const char *fsi_last_error(void);

// Library version as a static NUL-terminated string.
const char *fsi_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSISTAB_H */
