#ifndef ADACUSUM_H
#define ADACUSUM_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes. Values 2 through 7 match the exit codes of the `adacusum`
 command line tool.
 */
typedef enum AdacusumStatus {
  ADACUSUM_STATUS_OK = 0,
  ADACUSUM_STATUS_NULL_POINTER = 1,
  ADACUSUM_STATUS_INVALID_INPUT = 2,
  ADACUSUM_STATUS_DEGENERATE_VARIANCE = 3,
  ADACUSUM_STATUS_CONFIGURATION = 4,
  ADACUSUM_STATUS_MISSING_QUANTILE = 6,
  ADACUSUM_STATUS_IO = 7,
  ADACUSUM_STATUS_PANIC = 100,
} AdacusumStatus;

typedef enum AdacusumQuantileSource {
  ADACUSUM_QUANTILE_SOURCE_KOLMOGOROV = 0,
  ADACUSUM_QUANTILE_SOURCE_TABLE = 1,
} AdacusumQuantileSource;

/*
 A g-curve mapping a preliminary change location to a weight exponent.
 */
typedef struct AdacusumCurve AdacusumCurve;

/*
 A validated series of at least two finite observations.
 */
typedef struct AdacusumSeries AdacusumSeries;

/*
 A table of simulated critical values.
 */
typedef struct AdacusumTable AdacusumTable;

/*
 Argmax change-point estimate at a fixed weight exponent.
 */
typedef struct AdacusumEstimate {
  /*
   Estimated last pre-change index, in `1..n-1`.
   */
  size_t m_hat;
  double tau_hat;
  /*
   Maximum of the weighted CUSUM profile.
   */
  double statistic;
  double gamma;
} AdacusumEstimate;

/*
 Result of the plug-in estimator.
 */
typedef struct AdacusumAdaptiveEstimate {
  /*
   Rescaled argmax at gamma = 1/2.
   */
  double tau_prelim;
  double gamma_hat;
  size_t m_hat;
  double tau_hat;
  /*
   Weighted statistic at `gamma_hat`, divided by the sample standard
   deviation when studentized.
   */
  double statistic;
  bool studentized;
} AdacusumAdaptiveEstimate;

/*
 One simulated critical value.
 */
typedef struct AdacusumTableEntry {
  double gamma;
  size_t n;
  /*
   Quantile level, e.g. 0.95.
   */
  double level;
  double value;
  double stderr;
  size_t replications;
  uint64_t seed;
} AdacusumTableEntry;

/*
 Outcome of the adaptive test.
 */
typedef struct AdacusumTestDecision {
  double statistic;
  double critical_value;
  /*
   Significance level the test was run at.
   */
  double alpha;
  bool reject;
  double gamma_hat;
  enum AdacusumQuantileSource source;
  /*
   Table entry used; zeroed for the Kolmogorov source.
   */
  struct AdacusumTableEntry entry;
} AdacusumTestDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *adacusum_version(void);

/*
 Message for the most recent failed call on this thread, or NULL.

 The pointer stays valid until the next fallible call on the same thread.
 */
const char *adacusum_last_error_message(void);

/*
 Copies `len` values into a new series handle.

 # Safety
 `values` must point to `len` readable doubles; `out` must be writable.
 */
enum AdacusumStatus adacusum_series_new(const double *values,
                                        size_t len,
                                        struct AdacusumSeries **out);

/*
 # Safety
 `series` must be NULL or a handle from [`adacusum_series_new`] not yet freed.
 */
void adacusum_series_free(struct AdacusumSeries *series);

/*
 Number of observations, or 0 for a NULL handle.

 # Safety
 `series` must be NULL or a live series handle.
 */
size_t adacusum_series_len(const struct AdacusumSeries *series);

/*
 Builtin curve by name: `i`, `ii`, `iii`, `iv`, `v`, `vi` or `tent`.

 # Safety
 `name` must be a NUL-terminated string; `out` must be writable.
 */
enum AdacusumStatus adacusum_curve_builtin(const char *name, struct AdacusumCurve **out);

/*
 Piecewise-linear curve through `(xs[i], gs[i])`; `xs` must start at 0,
 end at 1 and increase strictly, `gs` must lie in `[0, 0.5]`.

 # Safety
 `xs` and `gs` must each point to `len` readable doubles; `out` must be writable.
 */
enum AdacusumStatus adacusum_curve_from_knots(const double *xs,
                                              const double *gs,
                                              size_t len,
                                              struct AdacusumCurve **out);

/*
 # Safety
 `curve` must be NULL or a live curve handle.
 */
void adacusum_curve_free(struct AdacusumCurve *curve);

/*
 Evaluates the curve at `x` in `[0, 1]`.

 # Safety
 `curve` must be a live curve handle; `out` must be writable.
 */
enum AdacusumStatus adacusum_curve_eval(const struct AdacusumCurve *curve, double x, double *out);

/*
 True when g(0) = g(1) = 0, i.e. the Kolmogorov quantile applies.

 # Safety
 `curve` must be NULL or a live curve handle.
 */
bool adacusum_curve_is_h0_compatible(const struct AdacusumCurve *curve);

/*
 Argmax estimator of the weighted CUSUM at a fixed `gamma` in `[0, 0.5]`.

 # Safety
 `series` must be a live series handle; `out` must be writable.
 */
enum AdacusumStatus adacusum_estimate(const struct AdacusumSeries *series,
                                      double gamma,
                                      struct AdacusumEstimate *out);

/*
 Weighted CUSUM statistic `T_n(gamma)` (not studentized).

 # Safety
 `series` must be a live series handle; `out` must be writable.
 */
enum AdacusumStatus adacusum_weighted_statistic(const struct AdacusumSeries *series,
                                                double gamma,
                                                double *out);

/*
 Plug-in estimator: preliminary location at gamma = 1/2, exponent from the
 curve, then the argmax at that exponent.

 # Safety
 `series` and `curve` must be live handles; `out` must be writable.
 */
enum AdacusumStatus adacusum_adaptive_estimate(const struct AdacusumSeries *series,
                                               const struct AdacusumCurve *curve,
                                               bool studentize,
                                               struct AdacusumAdaptiveEstimate *out);

/*
 CDF of the supremum of a standard Brownian bridge.
 */
double adacusum_kolmogorov_cdf(double x);

/*
 Quantile of the Kolmogorov distribution at `level` in `(0, 1)`.

 # Safety
 `out` must be writable.
 */
enum AdacusumStatus adacusum_kolmogorov_quantile(double level, double *out);

/*
 Simulated critical value of the studentized statistic under Gaussian
 noise. `workers == 0` uses every core; the result does not depend on it.

 # Safety
 `out` must be writable.
 */
enum AdacusumStatus adacusum_mc_quantile(double gamma,
                                         size_t n,
                                         double level,
                                         size_t replications,
                                         uint64_t seed,
                                         size_t workers,
                                         struct AdacusumTableEntry *out);

/*
 Loads a critical-value table written by `adacusum quantile`.

 # Safety
 `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum AdacusumStatus adacusum_table_load(const char *path, struct AdacusumTable **out);

/*
 # Safety
 `table` must be NULL or a live table handle.
 */
void adacusum_table_free(struct AdacusumTable *table);

/*
 Entry at the nearest tabulated gamma (ties toward the larger gamma) with
 exactly matching `n` and `level`.

 # Safety
 `table` must be a live table handle; `out` must be writable.
 */
enum AdacusumStatus adacusum_table_lookup(const struct AdacusumTable *table,
                                          double gamma,
                                          size_t n,
                                          double level,
                                          struct AdacusumTableEntry *out);

/*
 Adaptive weighted CUSUM test at significance `alpha`. A NULL `table`
 selects the Kolmogorov quantile, which requires g(0) = g(1) = 0.

 # Safety
 `series` and `curve` must be live handles, `table` NULL or live, `out` writable.
 */
enum AdacusumStatus adacusum_adaptive_test(const struct AdacusumSeries *series,
                                           const struct AdacusumCurve *curve,
                                           double alpha,
                                           const struct AdacusumTable *table,
                                           struct AdacusumTestDecision *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADACUSUM_H */
