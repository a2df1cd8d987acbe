#ifndef BEAMPLAN_H
#define BEAMPLAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI call.
 */
typedef enum BpStatus {
  BpStatus_Ok = 0,
  BpStatus_InvalidArgument = 1,
  BpStatus_SchemaError = 2,
  BpStatus_Capacity = 3,
  BpStatus_NullConditioning = 4,
  BpStatus_ModelMismatch = 5,
  BpStatus_Infeasible = 6,
  BpStatus_Io = 7,
  BpStatus_Serde = 8,
  BpStatus_NullPointer = 9,
  BpStatus_Panic = 10,
} BpStatus;

/**
 * An adaptive measurement plan bound to its skeleton process.
 */
typedef struct BpPlan BpPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bp_version(void);

/**
 * Copy the last error message (NUL-terminated, truncated to `cap`) into
 * `buf`; returns the full message length in bytes, or 0 if none.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be null (then only
 * the length is returned).
 */
uintptr_t bp_last_error(char *buf, uintptr_t cap);

/**
 * Build the optimal plan for the experiment configuration (JSON, same
 * schema as the CLI). On success `*out` owns the new handle.
 *
 * # Safety
 * `config_json` must be a NUL-terminated UTF-8 string and `out` a valid
 * pointer.
 */
enum BpStatus bp_plan_new(const char *config_json, struct BpPlan **out);

/**
 * Release a plan handle. Null is a no-op.
 *
 * # Safety
 * `plan` must be a pointer returned by [`bp_plan_new`], at most once.
 */
void bp_plan_free(struct BpPlan *plan);

/**
 * Expected number of reference points of the plan.
 *
 * # Safety
 * `plan` must be a live handle and `out` a valid pointer.
 */
enum BpStatus bp_plan_expected_k(const struct BpPlan *plan, double *out);

/**
 * First location the plan measures.
 *
 * # Safety
 * `plan` must be a live handle and `out` a valid pointer.
 */
enum BpStatus bp_plan_root(const struct BpPlan *plan, uint32_t *out);

/**
 * Serialize the plan (decisions keyed by beam-index skeletons) to JSON.
 * The returned string must be released with [`bp_string_free`].
 *
 * # Safety
 * `plan` must be a live handle and `out` a valid pointer.
 */
enum BpStatus bp_plan_to_json(const struct BpPlan *plan, char **out);

/**
 * Realize the plan against measured skeletons supplied by the callback and
 * return the realized partition as JSON. The callback receives a 1-based
 * location, must fill `pairs` (length `2 * L`) with the `(bs, ue)` beam
 * indices of the skeleton observed there (-1 marking a blocked slot), and
 * return 0 on success.
 *
 * # Safety
 * `plan` must be a live handle, `out` valid; the callback must honor the
 * buffer contract.
 */
enum BpStatus bp_plan_realize(const struct BpPlan *plan,
                              int32_t (*measure)(uint32_t location,
                                                 int32_t *pairs,
                                                 uintptr_t len,
                                                 void *user),
                              void *user,
                              char **out);

/**
 * Run the full experiment described by the configuration JSON and return
 * the report as JSON. Release the string with [`bp_string_free`].
 *
 * # Safety
 * `config_json` must be a NUL-terminated UTF-8 string and `out` valid.
 */
enum BpStatus bp_simulate(const char *config_json, char **out);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library, at most once.
 */
void bp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAMPLAN_H */
