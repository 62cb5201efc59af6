#ifndef MSPLACE_H
#define MSPLACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum MsplaceStatus {
  MSPLACE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MSPLACE_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  MSPLACE_STATUS_INVALID_UTF8 = 2,
  /**
   * Input text could not be parsed or violates the scenario schema.
   */
  MSPLACE_STATUS_MALFORMED = 3,
  /**
   * The solver found no feasible placement.
   */
  MSPLACE_STATUS_NO_SOLUTION = 4,
  /**
   * A parameter was out of range.
   */
  MSPLACE_STATUS_CONFIG = 5,
  /**
   * The library panicked; the handle arguments are unchanged.
   */
  MSPLACE_STATUS_INTERNAL = 6,
} MsplaceStatus;

/**
 * A solved placement with its cost and per-link flows.
 */
typedef struct MsplaceResult MsplaceResult;

/**
 * A parsed scenario: farm, procedures and workload.
 */
typedef struct MsplaceScenario MsplaceScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer. On
 * success `*out` receives a handle to release with
 * [`msplace_scenario_free`].
 */
enum MsplaceStatus msplace_scenario_from_json(const char *json, struct MsplaceScenario **out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `scenario` must come from [`msplace_scenario_from_json`] and not have been
 * released already.
 */
void msplace_scenario_free(struct MsplaceScenario *scenario);

/**
 * Places every procedure of the scenario with the mapping heuristic.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a writable pointer. On success
 * `*out` receives a handle to release with [`msplace_result_free`].
 */
enum MsplaceStatus msplace_solve_mm(const struct MsplaceScenario *scenario,
                                    struct MsplaceResult **out);

/**
 * Solves the scenario to optimality with branch-and-bound. When the time
 * limit expires with an incumbent, the incumbent is returned.
 *
 * # Safety
 * Same contract as [`msplace_solve_mm`].
 */
enum MsplaceStatus msplace_solve_exact(const struct MsplaceScenario *scenario,
                                       double time_limit_s,
                                       struct MsplaceResult **out);

/**
 * Writes the total inter-server flow of a result, in PDU/s.
 *
 * # Safety
 * `result` must be a live handle and `psi` a writable pointer.
 */
enum MsplaceStatus msplace_result_psi(const struct MsplaceResult *result, double *psi);

/**
 * Serializes a result as assignment JSON.
 *
 * # Safety
 * `result` must be a live handle and `json` a writable pointer. On success
 * `*json` receives a string to release with [`msplace_string_free`].
 */
enum MsplaceStatus msplace_result_assignment_json(const struct MsplaceResult *result, char **json);

/**
 * Releases a result. Null is ignored.
 *
 * # Safety
 * `result` must come from a solve function and not have been released
 * already.
 */
void msplace_result_free(struct MsplaceResult *result);

/**
 * Checks assignment JSON against every placement constraint of the
 * scenario. `*feasible` is set to 1 when all pass and 0 otherwise; the
 * first violation, if any, is available from [`msplace_last_error`].
 *
 * # Safety
 * `scenario` must be a live handle, `assignment_json` a NUL-terminated
 * string and `feasible` a writable pointer.
 */
enum MsplaceStatus msplace_validate(const struct MsplaceScenario *scenario,
                                    const char *assignment_json,
                                    int32_t *feasible);

/**
 * Copy of the message left by the calling thread's last call, or null
 * when that call left none.
 */
char *msplace_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been released already.
 */
void msplace_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSPLACE_H */
