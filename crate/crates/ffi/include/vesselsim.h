#ifndef VESSELSIM_H
#define VESSELSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. 2 and 3 match the CLI exit codes.
typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_CONFIG_ERROR = 2,
  VS_STATUS_DOMAIN_ERROR = 3,
  VS_STATUS_DEGENERATE_TIE = 4,
  VS_STATUS_INVALID_UTF8 = 5,
  VS_STATUS_PANIC = 6,
} VsStatus;

typedef enum VsTiePolicy {
  VS_TIE_POLICY_ERROR = 0,
  VS_TIE_POLICY_FAVOR_LEFT = 1,
  VS_TIE_POLICY_FAVOR_RIGHT = 2,
  // Uses the accompanying coin seed.
  VS_TIE_POLICY_SPLIT_COIN = 3,
} VsTiePolicy;

typedef enum VsClassification {
  VS_CLASSIFICATION_LOCAL = 0,
  VS_CLASSIFICATION_QUANTUM_ATTAINABLE = 1,
  VS_CLASSIFICATION_SUPER_QUANTUM = 2,
} VsClassification;

// Opaque parsed scenario.
typedef struct VsScenario VsScenario;

// Opaque superposition state over the 11 final splits.
typedef struct VsState VsState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *vs_version(void);

// Message for the last failure on this thread, or NULL. Valid until the next
// failing call on the same thread.
const char *vs_last_error_message(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void vs_string_free(char *s);

// Parses a scenario JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum VsStatus vs_scenario_parse(const char *json, struct VsScenario **out);

// # Safety
// `scenario` must come from `vs_scenario_parse` and not have been freed.
void vs_scenario_free(struct VsScenario *scenario);

// Seed recorded in a scenario.
//
// # Safety
// Pointers must be valid.
enum VsStatus vs_scenario_seed(const struct VsScenario *scenario, uint64_t *out);

// Runs a subcommand (`vessel-chsh`, `locality-check`, `sample-state`,
// `quantum-chsh`, `flow`) and returns the JSON report in `*out_json`, to be
// released with `vs_string_free`. `workers` = 0 uses one thread per core.
//
// # Safety
// Pointers must be valid; `subcommand` NUL-terminated.
enum VsStatus vs_run(const struct VsScenario *scenario,
                     const char *subcommand,
                     size_t workers,
                     char **out_json);

// Per-run CSV dump of a subcommand, released with `vs_string_free`.
//
// # Safety
// Pointers must be valid; `subcommand` NUL-terminated.
enum VsStatus vs_run_csv(const struct VsScenario *scenario, const char *subcommand, char **out_csv);

// Outcomes (+1/-1) of the coincidence experiment AB.
//
// # Safety
// Out-pointers must be writable.
enum VsStatus vs_joint_outcome_ab(double lambda_a,
                                  double lambda_b,
                                  enum VsTiePolicy policy,
                                  uint64_t coin_seed,
                                  int8_t *out_left,
                                  int8_t *out_right);

// Time-stepped drainage of both siphons; volumes in liters.
//
// # Safety
// Out-pointers must be writable.
enum VsStatus vs_simulate_flow(double lambda_a,
                               double lambda_b,
                               double total_volume,
                               double dt,
                               double *out_x_left,
                               double *out_x_right);

// `E(A'B') + E(A'B) + E(AB') - E(AB)` and its classification.
//
// # Safety
// Out-pointers must be writable.
enum VsStatus vs_bell_statistic(double e_aprime_bprime,
                                double e_aprime_b,
                                double e_a_bprime,
                                double e_ab,
                                double *out_value,
                                enum VsClassification *out_class);

// Singlet correlation `-a·b` for two unit 3-vectors.
//
// # Safety
// `a` and `b` must point to 3 doubles each; `out` must be writable.
enum VsStatus vs_singlet_expectation(const double *a, const double *b, double *out);

// Builds a superposition state from `len` amplitudes (`re[i] + i*im[i]`).
// `len` must be 11. `im` may be NULL for real amplitudes.
//
// # Safety
// `re` (and `im` when non-NULL) must point to `len` doubles.
enum VsStatus vs_state_new(const double *re,
                           const double *im,
                           size_t len,
                           bool normalize,
                           struct VsState **out);

// # Safety
// `state` must come from `vs_state_new` and not have been freed.
void vs_state_free(struct VsState *state);

// Born weight of split `x` (liters on the left, 0..=10).
//
// # Safety
// Pointers must be valid.
enum VsStatus vs_state_probability(const struct VsState *state, size_t x, double *out);

// One Born-rule sample; writes the liters collected on the left.
//
// # Safety
// Pointers must be valid.
enum VsStatus vs_state_born_sample(const struct VsState *state, uint64_t seed, uint8_t *out_x);

// Number of Schmidt coefficients above `tol`.
//
// # Safety
// Pointers must be valid.
enum VsStatus vs_state_schmidt_rank(const struct VsState *state, double tol, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VESSELSIM_H */
