#ifndef TREESAT_H
#define TREESAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a library call.
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  // A required pointer argument was NULL.
  TS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  TS_STATUS_INVALID_UTF8 = 2,
  // The input file could not be read.
  TS_STATUS_IO = 3,
  // Syntax, predicate or schema error in the problem text.
  TS_STATUS_PARSE = 4,
  // The formula is not cycle-free or otherwise ill-formed.
  TS_STATUS_FORMULA = 5,
  // A timeout that is not a positive finite number.
  TS_STATUS_INVALID_ARGUMENT = 6,
  // An internal error; the library state is unaffected.
  TS_STATUS_PANIC = 7,
} TsStatus;

// Solver verdict.
typedef enum TsVerdict {
  TS_VERDICT_SATISFIABLE = 0,
  TS_VERDICT_UNSATISFIABLE = 1,
  TS_VERDICT_TIMEOUT = 2,
} TsVerdict;

// A parsed problem with every predicate expanded.
typedef struct TsProblem TsProblem;

// The verdict, statistics and witness of one solver run.
typedef struct TsResult TsResult;

// Size of the search space and effort spent.
typedef struct TsStats {
  size_t lean_size;
  size_t eventualities;
  size_t symbols;
  size_t iterations;
  uint64_t elapsed_ms;
} TsStats;

// Parses problem text. `base_dir` resolves relative schema paths and may be
// NULL for the current directory. On success `*out` owns a new problem.
//
// # Safety
// `text` and a non-NULL `base_dir` must be NUL-terminated strings; `out`
// must be a valid pointer.
enum TsStatus ts_problem_from_text(const char *text, const char *base_dir, struct TsProblem **out);

// Reads and parses a problem file; schema paths resolve against its
// directory. On success `*out` owns a new problem.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum TsStatus ts_problem_from_file(const char *path, struct TsProblem **out);

// The expanded formula in the solver's trace syntax, or NULL for a NULL
// problem. Release with `ts_string_free`.
//
// # Safety
// `problem` must be NULL or a live problem handle.
char *ts_problem_formula(const struct TsProblem *problem);

// Number of schema warnings collected while loading.
//
// # Safety
// `problem` must be NULL or a live problem handle.
size_t ts_problem_warning_count(const struct TsProblem *problem);

// The `index`-th schema warning, or NULL when out of range. Release with
// `ts_string_free`.
//
// # Safety
// `problem` must be NULL or a live problem handle.
char *ts_problem_warning(const struct TsProblem *problem, size_t index);

// # Safety
// `problem` must be NULL or a handle not yet freed.
void ts_problem_free(struct TsProblem *problem);

// Decides the problem within `timeout_seconds`, which must be positive and
// finite. On success `*out` owns a new result whose verdict may be
// `Timeout`.
//
// # Safety
// `problem` must be a live problem handle; `out` must be a valid pointer.
enum TsStatus ts_solve(const struct TsProblem *problem,
                       double timeout_seconds,
                       struct TsResult **out);

// The verdict of a result; `Timeout` for a NULL result.
//
// # Safety
// `result` must be NULL or a live result handle.
enum TsVerdict ts_result_verdict(const struct TsResult *result);

// Lean size and effort of a run; all zero for a NULL result.
//
// # Safety
// `result` must be NULL or a live result handle.
struct TsStats ts_result_stats(const struct TsResult *result);

// The witness as a binary term such as `a(b, #)`, or NULL unless the
// verdict is satisfiable. Release with `ts_string_free`.
//
// # Safety
// `result` must be NULL or a live result handle.
char *ts_result_witness_term(const struct TsResult *result);

// The witness as XML with context and target marks, or NULL unless the
// verdict is satisfiable. Release with `ts_string_free`.
//
// # Safety
// `result` must be NULL or a live result handle.
char *ts_result_witness_xml(const struct TsResult *result);

// 1 when the witness satisfies the formula under the independent model
// checker, 0 otherwise (including when there is no witness).
//
// # Safety
// `result` must be NULL or a live result handle.
int32_t ts_result_witness_checks(const struct TsResult *result);

// # Safety
// `result` must be NULL or a handle not yet freed.
void ts_result_free(struct TsResult *result);

// Releases a string returned by this library.
//
// # Safety
// `s` must be NULL or a string from this library not yet freed.
void ts_string_free(char *s);

// Message of the last failed call on this thread, or NULL if none.
// Release with `ts_string_free`.
char *ts_last_error_message(void);

// Library version, statically allocated.
const char *ts_version(void);

#endif  /* TREESAT_H */
