#ifndef CQA_H
#define CQA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CqaStrategy {
  CQA_STRATEGY_MAX_SAT = 0,
  CQA_STRATEGY_ITER_SAT = 1,
} CqaStrategy;

/**
 * Result code of every fallible call.
 */
typedef enum CqaStatus {
  CQA_STATUS_OK = 0,
  CQA_STATUS_NULL_POINTER = 1,
  CQA_STATUS_INVALID_UTF8 = 2,
  CQA_STATUS_LOAD = 3,
  CQA_STATUS_ENGINE = 4,
  CQA_STATUS_OUT_OF_RANGE = 5,
  CQA_STATUS_NOT_BOOLEAN = 6,
  CQA_STATUS_INCOMPLETE = 7,
  CQA_STATUS_PANIC = 8,
} CqaStatus;

typedef enum CqaVerdict {
  CQA_VERDICT_CONSISTENT = 0,
  CQA_VERDICT_INCONSISTENT = 1,
  CQA_VERDICT_UNKNOWN = 2,
} CqaVerdict;

/**
 * A loaded instance with its constraints and query.
 */
typedef struct CqaProblem CqaProblem;

/**
 * Outcome of a consistent-answers run.
 */
typedef struct CqaReport CqaReport;

/**
 * Engine options. Obtain defaults from [`cqa_options_default`].
 */
typedef struct CqaOptions {
  enum CqaStrategy strategy;
  bool optimize;
  /**
   * Encode keys as generic denial constraints.
   */
  bool keys_as_denials;
  uint64_t seed;
  /**
   * Conflict limit per SAT call; 0 means unlimited.
   */
  uint64_t conflict_budget;
} CqaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cqa_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *cqa_last_error(void);

struct CqaOptions cqa_options_default(void);

/**
 * Load a problem from disk. `constraints` may be null for keys only.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be valid
 * for writes.
 */
enum CqaStatus cqa_problem_load(const char *schema,
                                const char *data_dir,
                                const char *constraints,
                                const char *query,
                                struct CqaProblem **out);

/**
 * Generate a synthetic problem for a catalog query.
 *
 * # Safety
 * `query` must be NUL-terminated; `out` must be valid for writes.
 */
enum CqaStatus cqa_problem_generate(const char *query,
                                    size_t rsize,
                                    double indeg,
                                    uint64_t seed,
                                    struct CqaProblem **out);

/**
 * Number of facts in the problem's instance, or 0 for null.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t cqa_problem_fact_count(const struct CqaProblem *problem);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void cqa_problem_free(struct CqaProblem *problem);

/**
 * Compute consistent answers. `options` may be null for defaults.
 *
 * # Safety
 * `problem` must be a live handle and `out` valid for writes.
 */
enum CqaStatus cqa_answer(const struct CqaProblem *problem,
                          const struct CqaOptions *options,
                          struct CqaReport **out);

/**
 * Decide whether a boolean query is true in every repair.
 *
 * # Safety
 * `problem` must be a live handle and `out` valid for writes.
 */
enum CqaStatus cqa_certain(const struct CqaProblem *problem,
                           const struct CqaOptions *options,
                           bool *out);

/**
 * Number of potential answers, or 0 for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cqa_report_answer_count(const struct CqaReport *report);

/**
 * Number of solver iterations, or 0 for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cqa_report_iterations(const struct CqaReport *report);

/**
 * Whether every answer got a definite verdict.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool cqa_report_complete(const struct CqaReport *report);

/**
 * Answer `index` rendered as `(v1, v2, ...)`.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writes.
 */
enum CqaStatus cqa_report_answer(const struct CqaReport *report, size_t index, char **out);

/**
 * Verdict of answer `index`.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writes.
 */
enum CqaStatus cqa_report_verdict(const struct CqaReport *report,
                                  size_t index,
                                  enum CqaVerdict *out);

/**
 * The full report as JSON.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writes.
 */
enum CqaStatus cqa_report_json(const struct CqaReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void cqa_report_free(struct CqaReport *report);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void cqa_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CQA_H */
