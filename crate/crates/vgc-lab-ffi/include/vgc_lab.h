#ifndef VGC_LAB_H
#define VGC_LAB_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit contract.
 */
typedef enum VgcLabStatus {
  VgcLabStatus_Ok = 0,
  VgcLabStatus_ConfigError = 2,
  VgcLabStatus_RuntimeError = 3,
  VgcLabStatus_NullPointer = 4,
  VgcLabStatus_InvalidUtf8 = 5,
} VgcLabStatus;

/**
 * Opaque handle over a parsed experiment configuration.
 */
typedef struct VgcLabExperiment VgcLabExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. Never null; empty when
 * no failure happened. Valid until the next call into this library.
 */
const char *vgc_lab_last_error(void);

/**
 * Library version as a static string; do not free.
 */
const char *vgc_lab_version(void);

/**
 * Parse a JSON experiment configuration. On success `*out` owns the handle;
 * release it with `vgc_lab_experiment_free`.
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` must be a valid
 * pointer to writable memory.
 */
enum VgcLabStatus vgc_lab_experiment_from_json(const char *json, struct VgcLabExperiment **out);

/**
 * Release an experiment handle. Null is accepted.
 *
 * # Safety
 * `handle` must be null or a pointer previously returned by
 * `vgc_lab_experiment_from_json` that has not been freed.
 */
void vgc_lab_experiment_free(struct VgcLabExperiment *handle);

/**
 * Run the experiment with the given master seed and worker count
 * (0 = all cores) and return the result table as a CSV string.
 *
 * # Safety
 * `handle` must be a live handle from `vgc_lab_experiment_from_json` and
 * `out_csv` a valid pointer to writable memory.
 */
enum VgcLabStatus vgc_lab_run_csv(const struct VgcLabExperiment *handle,
                                  uint64_t seed,
                                  uintptr_t workers,
                                  char **out_csv);

/**
 * Run the fast invariant suite; `*out_report` receives the rendered report.
 * Returns `Ok` when every property holds.
 *
 * # Safety
 * `out_report` must be null or a valid pointer to writable memory.
 */
enum VgcLabStatus vgc_lab_check(uint64_t seed, uintptr_t cases, char **out_report);

/**
 * Free a string returned by this library. Null is accepted.
 *
 * # Safety
 * `s` must be null or a pointer previously returned through an out-string
 * parameter of this library that has not been freed.
 */
void vgc_lab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VGC_LAB_H */
