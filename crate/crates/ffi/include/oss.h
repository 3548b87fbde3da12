#ifndef OSS_H
#define OSS_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum OssStatus {
  OSS_STATUS_OK = 0,
  OSS_STATUS_NULL_ARGUMENT = 1,
  OSS_STATUS_INVALID_UTF8 = 2,
  OSS_STATUS_PARSE = 3,
  OSS_STATUS_VALIDATION = 4,
  OSS_STATUS_INVALID_ARGUMENT = 5,
  OSS_STATUS_GUARD = 6,
  OSS_STATUS_BUDGET_EXCEEDED = 7,
  OSS_STATUS_IO = 8,
  /**
   * The requested value is absent, such as an exact reward that was
   * never computed.
   */
  OSS_STATUS_UNAVAILABLE = 9,
  OSS_STATUS_OUT_OF_RANGE = 10,
  OSS_STATUS_PANIC = 11,
} OssStatus;

/**
 * Opaque handle to a validated instance.
 */
typedef struct OssInstance OssInstance;

/**
 * Opaque handle to a solver or oracle result.
 */
typedef struct OssSolution OssSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *oss_last_error_message(void);

/**
 * Parses and validates an instance document.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be null or
 * point to writable storage for one pointer.
 */
enum OssStatus oss_instance_parse(const char *json, struct OssInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from [`oss_instance_parse`] not yet freed.
 */
void oss_instance_free(struct OssInstance *inst);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live instance handle.
 */
size_t oss_instance_node_count(const struct OssInstance *inst);

/**
 * Time budget, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live instance handle.
 */
uint64_t oss_instance_budget(const struct OssInstance *inst);

/**
 * Solves with the grid recipe for accuracy `epsilon`. `threads` = 0 uses
 * the global pool. With `exact_eval`, the plan is also evaluated exactly.
 *
 * # Safety
 * `inst` must be a live instance handle; `out` must point to writable
 * storage for one pointer.
 */
enum OssStatus oss_solve(const struct OssInstance *inst,
                         double epsilon,
                         uint32_t threads,
                         bool exact_eval,
                         struct OssSolution **out);

/**
 * Optimal plan by exhaustive enumeration.
 *
 * # Safety
 * As for [`oss_solve`].
 */
enum OssStatus oss_solve_exact(const struct OssInstance *inst, struct OssSolution **out);

/**
 * # Safety
 * `sol` must be null or a solution handle not yet freed.
 */
void oss_solution_free(struct OssSolution *sol);

/**
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum OssStatus oss_solution_predicted_reward(const struct OssSolution *sol, double *out);

/**
 * Fails with `Unavailable` unless exact evaluation was requested.
 *
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum OssStatus oss_solution_exact_reward(const struct OssSolution *sol, double *out);

/**
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum OssStatus oss_solution_delta_u_bound(const struct OssSolution *sol, double *out);

/**
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum OssStatus oss_solution_time_used(const struct OssSolution *sol, uint64_t *out);

/**
 * Number of distinct observed nodes in the plan.
 *
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum OssStatus oss_solution_plan_len(const struct OssSolution *sol, size_t *out);

/**
 * The `index`-th plan entry in ascending node order.
 *
 * # Safety
 * `sol` must be a live solution handle; `node` and `count` must be writable.
 */
enum OssStatus oss_solution_plan_entry(const struct OssSolution *sol,
                                       size_t index,
                                       uint32_t *node,
                                       uint32_t *count);

/**
 * Serializes the solution document. Release the string with
 * [`oss_string_free`].
 *
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum OssStatus oss_solution_to_json(const struct OssSolution *sol, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void oss_string_free(char *s);

/**
 * Exact expected reward of a plan given as `len` node ids; an id listed k
 * times is observed k times. The plan must fit the budget.
 *
 * # Safety
 * `inst` must be a live instance handle; `nodes` must point to `len`
 * readable ids (or be null when `len` is 0); `out` must be writable.
 */
enum OssStatus oss_eval_exact(const struct OssInstance *inst,
                              const uint32_t *nodes,
                              size_t len,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSS_H */
