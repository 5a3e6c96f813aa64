#ifndef GRAPHDEP_H
#define GRAPHDEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call. Values 1 to 4 match the CLI exit codes.
typedef enum GraphdepStatus {
  GRAPHDEP_STATUS_OK = 0,
  GRAPHDEP_STATUS_INPUT_ERROR = 1,
  GRAPHDEP_STATUS_SCALE_ERROR = 2,
  GRAPHDEP_STATUS_VERIFICATION_FAILED = 3,
  GRAPHDEP_STATUS_INTERNAL_ERROR = 4,
  GRAPHDEP_STATUS_KIND_ERROR = 5,
  GRAPHDEP_STATUS_PRECONDITION_ERROR = 6,
  GRAPHDEP_STATUS_NULL_POINTER = 7,
  GRAPHDEP_STATUS_INVALID_UTF8 = 8,
  GRAPHDEP_STATUS_PANIC = 9,
} GraphdepStatus;

// Decomposition strategy for the cover programs.
typedef enum GraphdepStrategy {
  GRAPHDEP_STRATEGY_ENUMERATED_LP = 0,
  GRAPHDEP_STRATEGY_COLUMN_GENERATION = 1,
  GRAPHDEP_STRATEGY_GREEDY = 2,
} GraphdepStrategy;

// Opaque dependency graph.
typedef struct GraphdepGraph GraphdepGraph;

// Opaque Lipschitz profile.
typedef struct GraphdepProfile GraphdepProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *graphdep_last_error_message(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string from this library not yet freed.
void graphdep_string_free(char *s);

// Builds a graph on vertices `1..=n` from `edge_count` pairs stored flat in
// `edges` (`u0, v0, u1, v1, ...`).
//
// # Safety
// `edges` must point to `2 * edge_count` values (may be NULL when
// `edge_count` is 0); `out_graph` must be valid for writes.
enum GraphdepStatus graphdep_graph_new(size_t n,
                                       const size_t *edges,
                                       size_t edge_count,
                                       struct GraphdepGraph **out_graph);

// Parses `{"n": .., "edges": [[u, v], ..]}` or an edge list.
//
// # Safety
// `text` must be a NUL-terminated string; `out_graph` valid for writes.
enum GraphdepStatus graphdep_graph_parse(const char *text, struct GraphdepGraph **out_graph);

// # Safety
// `graph` must be NULL or a handle from this library not yet freed.
void graphdep_graph_free(struct GraphdepGraph *graph);

// Number of vertices, or 0 for NULL.
//
// # Safety
// `graph` must be NULL or a live handle.
size_t graphdep_graph_vertex_count(const struct GraphdepGraph *graph);

// Number of edges, or 0 for NULL.
//
// # Safety
// `graph` must be NULL or a live handle.
size_t graphdep_graph_edge_count(const struct GraphdepGraph *graph);

// 1 if the graph is a forest, 0 otherwise (and for NULL).
//
// # Safety
// `graph` must be NULL or a live handle.
int graphdep_graph_is_forest(const struct GraphdepGraph *graph);

// Profile from `n` nonnegative doubles, converted exactly.
//
// # Safety
// `values` must point to `n` doubles; `out_profile` valid for writes.
enum GraphdepStatus graphdep_profile_new(const double *values,
                                         size_t n,
                                         struct GraphdepProfile **out_profile);

// Profile from `uniform:<c>` or a comma-separated list, for `n` coordinates.
//
// # Safety
// `spec` must be a NUL-terminated string; `out_profile` valid for writes.
enum GraphdepStatus graphdep_profile_parse(const char *spec,
                                           size_t n,
                                           struct GraphdepProfile **out_profile);

// # Safety
// `profile` must be NULL or a handle from this library not yet freed.
void graphdep_profile_free(struct GraphdepProfile *profile);

// Fractional chromatic number. When `exact_out` is non-NULL it receives the
// exact value as `"p/q"` (or NULL if only a float is known).
//
// # Safety
// `graph` must be a live handle; `value` valid for writes; `exact_out` NULL or valid for writes.
enum GraphdepStatus graphdep_fractional_chromatic_number(const struct GraphdepGraph *graph,
                                                         enum GraphdepStrategy strategy,
                                                         double *value,
                                                         char **exact_out);

// Fractional vertex arboricity; outputs as for the chromatic number.
//
// # Safety
// As for [`graphdep_fractional_chromatic_number`].
enum GraphdepStatus graphdep_fractional_vertex_arboricity(const struct GraphdepGraph *graph,
                                                          enum GraphdepStrategy strategy,
                                                          double *value,
                                                          char **exact_out);

// The decomposable-bound denominator `D(G, c)`. `is_exact` (optional)
// receives 1 when the value is optimal and 0 when it is an upper bound.
//
// # Safety
// Handles must be live; `d` valid for writes; `is_exact` NULL or valid for writes.
enum GraphdepStatus graphdep_decomposable_denominator(const struct GraphdepGraph *graph,
                                                      const struct GraphdepProfile *profile,
                                                      enum GraphdepStrategy strategy,
                                                      double *d,
                                                      int *is_exact);

// Forest denominator `sum_trees c_min^2 + sum_edges (c_i + c_j)^2`;
// fails with `KindError` when the graph has a cycle.
//
// # Safety
// Handles must be live; `value` valid for writes.
enum GraphdepStatus graphdep_forest_denominator(const struct GraphdepGraph *graph,
                                                const struct GraphdepProfile *profile,
                                                double *value);

// Block denominator for an `m`-dependent sequence of length `n`;
// `paulin` selects the last-block variant instead of the minimum block.
//
// # Safety
// `profile` must be a live handle; `value` valid for writes.
enum GraphdepStatus graphdep_m_dependent_denominator(size_t n,
                                                     size_t m,
                                                     const struct GraphdepProfile *profile,
                                                     int paulin,
                                                     double *value);

// `exp(-2 t^2 / denominator)`.
//
// # Safety
// `value` must be valid for writes.
enum GraphdepStatus graphdep_tail_bound(double denominator, double t, double *value);

// Compares every applicable bound at deviation `t` and returns the report
// as JSON. `methods` is NULL or `"all"` for every method, else a
// comma-separated list. `m_dependence` of 0 means none.
//
// # Safety
// Handles must be live; `methods` NULL or NUL-terminated; `json_out` valid for writes.
enum GraphdepStatus graphdep_compare_bounds_json(const struct GraphdepGraph *graph,
                                                 const struct GraphdepProfile *profile,
                                                 double t,
                                                 const char *methods,
                                                 int assume_independent,
                                                 size_t m_dependence,
                                                 char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHDEP_H */
