#ifndef SPINQUDIT_H
#define SPINQUDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes; 2-4 match the command-line exit codes.
 */
typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_IO = 1,
  /**
   * Malformed input: bad JSON, unknown preset, out-of-range values.
   */
  SQ_STATUS_INVALID = 2,
  /**
   * A physics check failed (labeling, factorization, RWA, time step).
   */
  SQ_STATUS_PHYSICS = 3,
  SQ_STATUS_SCHEDULING = 4,
  SQ_STATUS_NULL_ARGUMENT = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  SQ_STATUS_PANIC = 6,
} SqStatus;

typedef enum SqBackend {
  SQ_BACKEND_LAB = 0,
  SQ_BACKEND_RWA = 1,
  SQ_BACKEND_IDEAL = 2,
} SqBackend;

/**
 * Opaque experiment configuration.
 */
typedef struct SqConfig SqConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *sq_version(void);

/**
 * Message of the last failure on this thread; valid until the next failure.
 */
const char *sq_last_error(void);

/**
 * Preset names and notes, one per line.
 *
 * # Safety
 * `out` must be a valid pointer to write a string pointer into.
 */
enum SqStatus sq_list_presets(char **out);

/**
 * Builds a config for experiment `kind` (e.g. "dqs") from a shipped preset.
 *
 * # Safety
 * `kind` and `preset` must be NUL-terminated strings; `out` must be writable.
 */
enum SqStatus sq_config_from_preset(const char *kind, const char *preset, struct SqConfig **out);

/**
 * Parses and validates a JSON config document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_config_from_json(const char *json, struct SqConfig **out);

/**
 * Pretty JSON form of the config.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be writable.
 */
enum SqStatus sq_config_to_json(struct SqConfig *cfg, char **out);

/**
 * Hex SHA-256 of the config.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be writable.
 */
enum SqStatus sq_config_hash(struct SqConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must come from this library.
 */
enum SqStatus sq_config_set_backend(struct SqConfig *cfg, enum SqBackend backend);

/**
 * # Safety
 * `cfg` must come from this library.
 */
enum SqStatus sq_config_set_seed(struct SqConfig *cfg, uint64_t seed);

/**
 * Coherence times in µs; `INFINITY` means no dephasing.
 *
 * # Safety
 * `cfg` must come from this library; `values` must hold `n` doubles.
 */
enum SqStatus sq_config_set_t2(struct SqConfig *cfg, const double *values, size_t n);

/**
 * Simulated times, units of 1/Omega.
 *
 * # Safety
 * `cfg` must come from this library; `values` must hold `n` doubles.
 */
enum SqStatus sq_config_set_times(struct SqConfig *cfg, const double *values, size_t n);

/**
 * Coupling sweep for ground-state searches.
 *
 * # Safety
 * `cfg` must come from this library; `values` must hold `n` doubles.
 */
enum SqStatus sq_config_set_g_grid(struct SqConfig *cfg, const double *values, size_t n);

/**
 * Runs the experiment, writing its files into `out_dir`. When `summary` is
 * non-null it receives the JSON summary.
 *
 * # Safety
 * `cfg` must come from this library; `out_dir` must be a NUL-terminated
 * string; `summary` must be null or writable.
 */
enum SqStatus sq_run(struct SqConfig *cfg, const char *out_dir, char **summary);

/**
 * # Safety
 * `cfg` must be null or come from this library, and not be used afterwards.
 */
void sq_config_free(struct SqConfig *cfg);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void sq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINQUDIT_H */
