#ifndef NORMCASE_H
#define NORMCASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_NULL_ARGUMENT = 1,
  NC_STATUS_INVALID_UTF8 = 2,
  NC_STATUS_PARSE_ERROR = 3,
  NC_STATUS_INVALID_JSON = 4,
  NC_STATUS_INVALID_DATE = 5,
  NC_STATUS_UNKNOWN_ACT = 6,
  NC_STATUS_UNKNOWN_FACT = 7,
  NC_STATUS_TYPE_MISMATCH = 8,
  NC_STATUS_MOTIVATION_REQUIRED = 9,
  NC_STATUS_ALREADY_EXECUTED = 10,
  NC_STATUS_DEPTH_OUT_OF_RANGE = 11,
  NC_STATUS_PANIC = 12,
} NcStatus;

// Normative status of an act.
typedef enum NcActStatus {
  NC_ACT_STATUS_ALLOWED = 0,
  NC_ACT_STATUS_NOT_ALLOWED = 1,
  NC_ACT_STATUS_INDEFINITE = 2,
} NcActStatus;

// A checked norm specification.
typedef struct NcSpec NcSpec;

// A case state under some spec.
typedef struct NcState NcState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a
// successful one. The pointer stays valid until the next call into the
// library on the same thread.
const char *nc_last_error_message(void);

// Library version as a static string.
const char *nc_version(void);

// # Safety
// `s` must come from this library and not have been freed.
void nc_string_free(char *s);

// Parses and checks spec source text. On `NC_STATUS_PARSE_ERROR` the
// error message lists every diagnostic as `line:column: message`.
//
// # Safety
// `source` must be a NUL-terminated string; `out` must be writable.
enum NcStatus nc_spec_parse(const char *source, struct NcSpec **out);

// # Safety
// `spec` must come from [`nc_spec_parse`] and not have been freed.
void nc_spec_free(struct NcSpec *spec);

// Creates a state at `clock` (`YYYY-MM-DD`). `assignments_json` is an
// object of fact instance to value, `null` meaning unknown; it may be
// NULL for an empty state.
//
// # Safety
// Pointers must be valid; string arguments NUL-terminated.
enum NcStatus nc_state_new(const struct NcSpec *spec,
                           const char *assignments_json,
                           const char *clock,
                           struct NcState **out);

// Restores a state written by [`nc_state_to_json`].
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum NcStatus nc_state_from_json(const char *json, struct NcState **out);

// # Safety
// `state` must be a live handle; `out` must be writable.
enum NcStatus nc_state_to_json(const struct NcState *state, char **out);

// # Safety
// `state` must come from this library and not have been freed.
void nc_state_free(struct NcState *state);

// Sets one fact instance, e.g. `income` or `flagged(3)`, to a JSON value;
// the text `null` makes it unknown.
//
// # Safety
// Pointers must be valid; string arguments NUL-terminated.
enum NcStatus nc_state_assign(const struct NcSpec *spec,
                              struct NcState *state,
                              const char *fact,
                              const char *value_json);

// # Safety
// Pointers must be valid; `act` NUL-terminated.
enum NcStatus nc_action_status(const struct NcSpec *spec,
                               const struct NcState *state,
                               const char *act,
                               enum NcActStatus *out);

// Executes `act` at midnight of the state's clock. `actor` may be NULL
// for the act's declared actor. A motivation is required unless the act
// is Allowed. When `violation_json` is not NULL it receives the recorded
// violation as JSON, or NULL if there was none.
//
// # Safety
// Pointers must be valid; string arguments NUL-terminated.
enum NcStatus nc_execute(const struct NcSpec *spec,
                         struct NcState *state,
                         const char *act,
                         const char *actor,
                         const char *motivation,
                         char **violation_json);

// Moves the clock to `clock` and marks duties whose violation condition
// now holds. When `violations_json` is not NULL it receives a JSON array
// of the new violations.
//
// # Safety
// Pointers must be valid; `clock` NUL-terminated.
enum NcStatus nc_check_duties(const struct NcSpec *spec,
                              struct NcState *state,
                              const char *clock,
                              char **violations_json);

// Every act not yet executed with its status and reasons, as a JSON array
// of `{name, status, reasons}`.
//
// # Safety
// Pointers must be valid.
enum NcStatus nc_available_actions_json(const struct NcSpec *spec,
                                        const struct NcState *state,
                                        char **out);

// The action tree reachable from `state` in at most `depth` steps, in the
// same JSON shape the HTTP simulation endpoint returns.
//
// # Safety
// Pointers must be valid.
enum NcStatus nc_tree_json(const struct NcSpec *spec,
                           const struct NcState *state,
                           size_t depth,
                           char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NORMCASE_H */
