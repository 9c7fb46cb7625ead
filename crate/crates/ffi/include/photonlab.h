/* Copyright (c) The photonlab Authors */
/* SPDX-License-Identifier: Apache-2.0 */

#ifndef PHOTONLAB_H
#define PHOTONLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PlStatus {
  PL_STATUS_OK = 0,
  // A required pointer argument was null.
  PL_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  PL_STATUS_INVALID_UTF8 = 2,
  // The setup text could not be parsed.
  PL_STATUS_PARSE_ERROR = 3,
  // The setup parsed but describes an invalid board.
  PL_STATUS_INVALID_SETUP = 4,
  // Simulation failed.
  PL_STATUS_SIMULATION_ERROR = 5,
  // The tree hit its node budget. The tree is still returned.
  PL_STATUS_BUDGET_EXHAUSTED = 6,
  // Unknown fixture, detector or basis name.
  PL_STATUS_NOT_FOUND = 7,
  // A Rust panic was caught at the boundary.
  PL_STATUS_PANIC = 8,
} PlStatus;

// A validated board.
typedef struct PlBoard PlBoard;

// An expanded multiverse tree.
typedef struct PlTree PlTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string.
const char *pl_version(void);

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from this thread.
const char *pl_last_error(void);

// Parse and validate a setup document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum PlStatus pl_board_from_json(const char *json, struct PlBoard **out);

// Board of a named fixture.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum PlStatus pl_board_from_fixture(const char *name, struct PlBoard **out);

// Release a board. Null is ignored.
//
// # Safety
// `board` must be null or a handle from this library not yet freed.
void pl_board_free(struct PlBoard *board);

// Number of photons the board's sources emit.
//
// # Safety
// `board` must be a live handle and `out` a writable pointer.
enum PlStatus pl_board_photon_count(const struct PlBoard *board, uintptr_t *out);

// Expand the full tree. Zero limits take the defaults (200 steps, 1e-9
// branch probability, 100000 nodes). Returns `BudgetExhausted` together
// with the partial tree when the node budget runs out.
//
// # Safety
// `board` must be a live handle and `out` a writable pointer.
enum PlStatus pl_tree_run(const struct PlBoard *board,
                          uintptr_t max_steps,
                          double min_branch_probability,
                          uintptr_t max_nodes,
                          struct PlTree **out);

// Release a tree. Null is ignored.
//
// # Safety
// `tree` must be null or a handle from this library not yet freed.
void pl_tree_free(struct PlTree *tree);

// # Safety
// `tree` must be a live handle and `out` a writable pointer.
enum PlStatus pl_tree_node_count(const struct PlTree *tree, uintptr_t *out);

// Probability mass of branches that ran to completion.
//
// # Safety
// `tree` must be a live handle and `out` a writable pointer.
enum PlStatus pl_tree_explored_mass(const struct PlTree *tree, double *out);

// Probability that detector `id` fired. Ids that never fired read 0.
//
// # Safety
// `tree` must be a live handle, `id` a NUL-terminated string and `out` a
// writable pointer.
enum PlStatus pl_tree_detector_probability(const struct PlTree *tree, const char *id, double *out);

// Tree as JSON in the given polarization basis (`"HV"`, `"DA"`, `"LR"`;
// null means HV). Free the result with `pl_string_free`.
//
// # Safety
// `tree` must be a live handle, `basis` null or a NUL-terminated string,
// and `out` a writable pointer.
enum PlStatus pl_tree_to_json(const struct PlTree *tree, const char *basis, char **out);

// Sample `n` runs seeded with `seed` and return the CSV detection log.
// `max_steps` of zero takes the default. Free the result with
// `pl_string_free`.
//
// # Safety
// `board` must be a live handle and `out` a writable pointer.
enum PlStatus pl_sample_csv(const struct PlBoard *board,
                            uint64_t n,
                            uint64_t seed,
                            uintptr_t max_steps,
                            char **out);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void pl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTONLAB_H */
