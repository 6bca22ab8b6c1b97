#ifndef RIS_SUMRATE_H
#define RIS_SUMRATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_POINTER = 1,
  RS_STATUS_INVALID_UTF8 = 2,
  RS_STATUS_INVALID_INPUT = 3,
  RS_STATUS_IO = 4,
  RS_STATUS_NUMERICAL = 5,
  RS_STATUS_PANIC = 6,
} RsStatus;

/**
 * Which designs a run covers.
 */
typedef enum RsMode {
  RS_MODE_MCA = 0,
  RS_MODE_MCU = 1,
  RS_MODE_BOTH = 2,
} RsMode;

/**
 * Opaque experiment result handle.
 */
typedef struct RsResult RsResult;

/**
 * Opaque scenario handle.
 */
typedef struct RsScenario RsScenario;

/**
 * Thin-wire dipole: center and unit axis in meters, full length, radius.
 */
typedef struct RsDipole {
  double center[3];
  double axis[3];
  double length;
  double radius;
} RsDipole;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *rs_last_error_message(void);

/**
 * Parses and validates a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RsStatus rs_scenario_from_json(const char *json, struct RsScenario **out);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RsStatus rs_scenario_load(const char *path, struct RsScenario **out);

/**
 * Overrides the iteration count of a scenario.
 *
 * # Safety
 * `scenario` must come from this library and not be freed.
 */
enum RsStatus rs_scenario_set_iterations(struct RsScenario *scenario, size_t iterations);

/**
 * # Safety
 * `scenario` must be null or come from this library; it must not be used afterwards.
 */
void rs_scenario_free(struct RsScenario *scenario);

/**
 * Runs the convergence experiment for `mode`.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum RsStatus rs_run_convergence(const struct RsScenario *scenario,
                                 enum RsMode mode,
                                 struct RsResult **out);

/**
 * Number of trace rows (all modes together).
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum RsStatus rs_result_trace_len(const struct RsResult *result, size_t *out);

/**
 * Last reported sum-rate (bits) of `mode`, which must be `Mca` or `Mcu`.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum RsStatus rs_result_final_sum_rate(const struct RsResult *result,
                                       enum RsMode mode,
                                       double *out);

/**
 * Writes the CSV files and `metadata.json` into `dir`.
 *
 * # Safety
 * `result` must be a live handle; `dir` a NUL-terminated string.
 */
enum RsStatus rs_result_write(const struct RsResult *result, const char *dir);

/**
 * # Safety
 * `result` must be null or come from this library; it must not be used afterwards.
 */
void rs_result_free(struct RsResult *result);

/**
 * Mutual impedance in ohms between two dipoles.
 *
 * # Safety
 * All pointers must be valid; `re` and `im` writable.
 */
enum RsStatus rs_mutual_impedance(const struct RsDipole *a,
                                  const struct RsDipole *b,
                                  double wavelength,
                                  double *re,
                                  double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_SUMRATE_H */
