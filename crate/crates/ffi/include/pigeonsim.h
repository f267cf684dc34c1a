#ifndef PIGEONSIM_H
#define PIGEONSIM_H

/* Generated by cbindgen from the pigeonsim-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call. Nonzero values match the CLI exit codes
// for the same error classes.
typedef enum PsStatus {
  // The call succeeded and any out-pointers were written.
  PS_STATUS_OK = 0,
  // A defect inside the library (caught panic, failed serialization).
  PS_STATUS_INTERNAL = 1,
  // An argument or combination of arguments was rejected.
  PS_STATUS_INVALID_INPUT = 2,
  // No measurement outcome connects the pre- and post-selection.
  PS_STATUS_IMPOSSIBLE_POSTSELECTION = 3,
  // An input/output operation failed.
  PS_STATUS_IO = 4,
} PsStatus;

// Opaque pre/post-selected register handle.
typedef struct PsScenario PsScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from the most recent failed call on this thread, or null if no
// call has failed yet. The pointer stays valid until the next failed call
// on the same thread; do not free it.
const char *ps_last_error(void);

// Release a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be a pointer previously returned through a `char **` out
// parameter of this library, not yet freed.
void ps_string_free(char *s);

// Build the canonical scenario: `num_particles` particles prepared in the
// uniform superposition over `num_boxes` boxes, post-selected on the
// fourier-basis element `outcome[p]` per particle. `outcome_len` must equal
// `num_particles`.
//
// # Safety
// `outcome` must point to `outcome_len` readable elements and `out` must be
// a valid writable pointer.
enum PsStatus ps_scenario_new(size_t num_particles,
                              size_t num_boxes,
                              const size_t *outcome,
                              size_t outcome_len,
                              struct PsScenario **out);

// Build a scenario with explicit single-particle preparations. `amplitudes`
// holds `outcome_len * num_boxes` complex numbers as interleaved
// (re, im) doubles, particle-major: entry `2 * (p * num_boxes + k)` is the
// real part of particle p's amplitude on box k. The post-selection is the
// fourier-basis product selected by `outcome`, as in [`ps_scenario_new`].
//
// # Safety
// `outcome` must point to `outcome_len` readable elements, `amplitudes` to
// `amplitudes_len` readable doubles, and `out` must be a valid writable
// pointer.
enum PsStatus ps_scenario_with_pre(size_t num_boxes,
                                   const size_t *outcome,
                                   size_t outcome_len,
                                   const double *amplitudes,
                                   size_t amplitudes_len,
                                   struct PsScenario **out);

// Release a scenario handle. Null is a no-op.
//
// # Safety
// `s` must come from a scenario constructor of this library, not yet freed.
void ps_scenario_free(struct PsScenario *s);

// Write the full pair-correlation report for a scenario as JSON, matching
// the `pattern` CLI command.
//
// # Safety
// `s` must be a live scenario handle and `out_json` a valid writable
// pointer.
enum PsStatus ps_pattern_json(const struct PsScenario *s, char **out_json);

// Write the conditional probability that particles `i` and `j` (zero-based,
// distinct) occupy the same box, given both selections.
//
// # Safety
// `s` must be a live scenario handle and `out` a valid writable pointer.
enum PsStatus ps_pair_same_probability(const struct PsScenario *s, size_t i, size_t j, double *out);

// Write the weak value of the same-box projector for particles `i` and `j`
// (zero-based, distinct) as a complex number.
//
// # Safety
// `s` must be a live scenario handle; `out_re` and `out_im` must be valid
// writable pointers.
enum PsStatus ps_weak_value(const struct PsScenario *s,
                            size_t i,
                            size_t j,
                            double *out_re,
                            double *out_im);

// Run the N-particle, M-box generalization check and write its report as
// JSON, matching one row of the `general` CLI command.
//
// # Safety
// `out_json` must be a valid writable pointer.
enum PsStatus ps_general_json(size_t num_particles, size_t num_boxes, char **out_json);

// Sample repeated runs with a same-or-different measurement on the pair
// (`pair_i`, `pair_j`) between the selections, compare the counts against
// exact enumeration, and write the comparison as JSON, matching the
// `montecarlo` CLI command's oracle artifact.
//
// # Safety
// `s` must be a live scenario handle and `out_json` a valid writable
// pointer.
enum PsStatus ps_montecarlo_json(const struct PsScenario *s,
                                 size_t pair_i,
                                 size_t pair_j,
                                 uint64_t samples,
                                 uint64_t seed,
                                 char **out_json);

// Scan mean pointer shifts over `lambdas` with pointer width `sigma` and
// write the fitted log-log slopes as JSON, matching the `deflection` CLI
// command's slope artifact. With `postselected` false the scan traces out
// the final measurement instead of conditioning on it.
//
// # Safety
// `s` must be a live scenario handle, `lambdas` must point to `lambdas_len`
// readable doubles, and `out_json` must be a valid writable pointer.
enum PsStatus ps_deflection_json(const struct PsScenario *s,
                                 const double *lambdas,
                                 size_t lambdas_len,
                                 double sigma,
                                 bool postselected,
                                 char **out_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PIGEONSIM_H */
