/* C interface of the levy-coupling library. Generated; do not edit. */

#ifndef LEVY_COUPLING_H
#define LEVY_COUPLING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Verdict codes returned by [`lc_decide_coupling`], matching the CLI exit
// codes for the `check` subcommand.
#define LC_VERDICT_COUPLING 0

#define LC_VERDICT_NO_COUPLING 3

#define LC_VERDICT_INCONCLUSIVE 4

// Status of an FFI call. Nonzero values mirror the CLI exit-code taxonomy
// where one exists.
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  // Input text could not be parsed.
  LC_STATUS_PARSE_ERROR = 1,
  // Input parsed but violates an invariant, or a pointer argument is
  // invalid.
  LC_STATUS_INVALID_INPUT = 2,
  // Computation stopped by its work budget.
  LC_STATUS_BUDGET_EXCEEDED = 5,
  // Coupled step construction has no overlap to work with.
  LC_STATUS_DEGENERATE_OVERLAP = 6,
  // Not enough usable data points.
  LC_STATUS_INSUFFICIENT_DATA = 7,
  // A required pointer argument was NULL.
  LC_STATUS_NULL_ARGUMENT = 8,
  // Internal panic; state is unchanged but the call did nothing.
  LC_STATUS_PANIC = 9,
} LcStatus;

// Finite measure handle (atoms plus lattice density).
typedef struct LcMeasure LcMeasure;

// Evaluated transition-law series handle.
typedef struct LcSeries LcSeries;

// Process triplet handle.
typedef struct LcTriplet LcTriplet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the current thread's last error message into `buf` (truncated to
// `cap - 1` bytes, always NUL-terminated when `cap > 0`). Returns the full
// message length in bytes excluding the NUL; 0 means no error is recorded.
//
// # Safety
// `buf` must point to `cap` writable bytes, or be NULL (then only the
// required length is returned).
size_t lc_last_error(char *buf, size_t cap);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must have been returned by a function of this library and not freed
// before.
void lc_string_free(char *s);

// Parses a measure from its JSON form (`dim`, optional `atoms`, optional
// `density`). On success `*out` owns the new handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum LcStatus lc_measure_from_json(const char *json, struct LcMeasure **out);

// Serializes a measure back to JSON. The string must be released with
// [`lc_string_free`].
//
// # Safety
// `measure` must be a live handle; `out` must be writable.
enum LcStatus lc_measure_to_json(const struct LcMeasure *measure, char **out);

// Releases a measure handle. NULL is ignored.
//
// # Safety
// `measure` must be a live handle from this library or NULL.
void lc_measure_free(struct LcMeasure *measure);

// Total mass of the measure.
//
// # Safety
// `measure` must be a live handle; `out` must be writable.
enum LcStatus lc_measure_total_mass(const struct LcMeasure *measure, double *out);

// Total variation distance between two measures. Density parts on
// incompatible lattices are treated as mutually singular.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum LcStatus lc_measure_tv(const struct LcMeasure *a, const struct LcMeasure *b, double *out);

// Mass of the greatest common lower bound (overlap) of two measures.
// Density parts on incompatible lattices are treated as mutually singular.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum LcStatus lc_measure_meet_mass(const struct LcMeasure *a,
                                   const struct LcMeasure *b,
                                   double *out);

// Convolution of two measures into a new handle.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum LcStatus lc_measure_convolve(const struct LcMeasure *a,
                                  const struct LcMeasure *b,
                                  struct LcMeasure **out);

// Evaluates the transition law of the compound jump process with the given
// step law and jump rate at time `time`, truncating the jump-count series
// so at most `tol` probability mass is dropped.
//
// # Safety
// `step_law` must be a live handle; `out` must be writable.
enum LcStatus lc_series_build(const struct LcMeasure *step_law,
                              double rate,
                              double time,
                              double tol,
                              struct LcSeries **out);

// Releases a series handle. NULL is ignored.
//
// # Safety
// `series` must be a live handle from this library or NULL.
void lc_series_free(struct LcSeries *series);

// Number of jump-count terms the series kept.
//
// # Safety
// `series` must be a live handle; `out` must be writable.
enum LcStatus lc_series_order(const struct LcSeries *series, size_t *out);

// Probability mass dropped by the truncation.
//
// # Safety
// `series` must be a live handle; `out` must be writable.
enum LcStatus lc_series_tail_mass(const struct LcSeries *series, double *out);

// Total variation distance between the transition laws started at `x` and
// `y` (each `dim` coordinates), as a certified interval.
//
// # Safety
// `series` must be a live handle; `x` and `y` must point to `dim` doubles;
// the three output pointers must be writable.
enum LcStatus lc_series_tv(const struct LcSeries *series,
                           const double *x,
                           const double *y,
                           size_t dim,
                           double *out_lower,
                           double *out_center,
                           double *out_upper);

// Series upper bound on the transition-law distance built from per-step
// distances.
//
// # Safety
// `series` must be a live handle; `x` and `y` must point to `dim` doubles;
// `out` must be writable.
enum LcStatus lc_series_tv_bound(const struct LcSeries *series,
                                 const double *x,
                                 const double *y,
                                 size_t dim,
                                 double *out);

// Parses a process triplet from JSON. On success `*out` owns the handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum LcStatus lc_triplet_from_json(const char *json, struct LcTriplet **out);

// Releases a triplet handle. NULL is ignored.
//
// # Safety
// `triplet` must be a live handle from this library or NULL.
void lc_triplet_free(struct LcTriplet *triplet);

// Decides the coupling property. `*out_verdict` receives
// `LC_VERDICT_COUPLING`, `LC_VERDICT_NO_COUPLING`, or
// `LC_VERDICT_INCONCLUSIVE`. When `out_report_json` is non-NULL it receives
// the full report as JSON (release with [`lc_string_free`]).
//
// # Safety
// `triplet` must be a live handle; `out_verdict` must be writable;
// `out_report_json` may be NULL.
enum LcStatus lc_decide_coupling(const struct LcTriplet *triplet,
                                 uint32_t search_depth,
                                 int32_t *out_verdict,
                                 char **out_report_json);

// Square-root decay bound on the transition-law distance, capped at 2.
// `c_xy` must dominate `sqrt(n)` times the n-step walk distance.
//
// # Safety
// `out` must be writable.
enum LcStatus lc_couplingo2_bound(double rate, double t, double c_xy, bool x_equals_y, double *out);

// Dimension-free decay bound `min(2, c * (1 + distance) / sqrt(t))`.
//
// # Safety
// `out` must be writable.
enum LcStatus lc_th2_bound(double t, double distance, double c, double *out);

// Both sides of the series comparison behind the square-root bound;
// `lhs <= rhs` holds for every valid `(rate, t)`.
//
// # Safety
// `out_lhs` and `out_rhs` must be writable.
enum LcStatus lc_jensen_chain(double rate, double t, double *out_lhs, double *out_rhs);

// Ordinary least squares power-law fit of `values ~ t^slope` on the log-log
// scale. Values at or below 1e-13 are dropped; at least five surviving
// points spanning two decades of `t` are required.
//
// # Safety
// `times` and `values` must point to `len` doubles each; the three output
// pointers must be writable.
enum LcStatus lc_fit_rate(const double *times,
                          const double *values,
                          size_t len,
                          double *out_slope,
                          double *out_intercept,
                          double *out_r_squared);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVY_COUPLING_H */
