#ifndef TLAB_H
#define TLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum TlabStatus {
  TLAB_STATUS_OK = 0,
  TLAB_STATUS_NULL_POINTER = 1,
  TLAB_STATUS_INVALID_ARGUMENT = 2,
  TLAB_STATUS_DOMAIN = 3,
  TLAB_STATUS_DEGENERATE_CHANNEL = 4,
  TLAB_STATUS_SAMPLE_SIZE_TOO_SMALL = 5,
  TLAB_STATUS_TOO_LARGE = 6,
  TLAB_STATUS_IO = 7,
  TLAB_STATUS_PARSE = 8,
  TLAB_STATUS_PANIC = 99,
} TlabStatus;

// Opaque channel: the moments of `log P(Y|X)` from a symmetric channel or a
// score file.
typedef struct TlabChannel TlabChannel;

// Opaque experiment configuration.
typedef struct TlabConfig TlabConfig;

// Moments of `log P(Y|X)`.
typedef struct TlabStats {
  double h;
  double sigma;
  double rho;
} TlabStats;

// A bound on `n gamma` in nats. `vacuous` is 1 when the bound carries no
// information (value `-inf`).
typedef struct TlabBound {
  double value_nats;
  double per_sample_nats;
  int32_t vacuous;
} TlabBound;

// Result of an exponent minimization. `value` is `+inf` when infeasible.
typedef struct TlabExponent {
  double value;
  double certified_gap;
  int32_t feasible;
  int32_t heuristic;
} TlabExponent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next `tlab_*` call on the same thread.
const char *tlab_last_error(void);

// Library version as a static NUL-terminated string.
const char *tlab_version(void);

// Symmetric channel with flip probability `epsilon` over `m_classes` labels.
//
// # Safety
// `out` must be a valid pointer to writable storage for one pointer.
enum TlabStatus tlab_channel_symmetric(double epsilon,
                                       uintptr_t m_classes,
                                       struct TlabChannel **out);

// Plug-in channel from a score CSV (`p_0,...,p_{M-1},label`).
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum TlabStatus tlab_channel_from_scores_csv(const char *path, struct TlabChannel **out);

// Releases a channel. Null is ignored.
//
// # Safety
// `ch` must come from a `tlab_channel_*` constructor and not be used again.
void tlab_channel_free(struct TlabChannel *ch);

// # Safety
// `ch` must be a live channel and `out` a valid pointer.
enum TlabStatus tlab_channel_stats(const struct TlabChannel *ch, struct TlabStats *out);

// Exact finite-n converse. A non-positive `delta` selects `1/sqrt(n)`.
//
// # Safety
// `ch` must be a live channel and `out` a valid pointer.
enum TlabStatus tlab_converse_exact(const struct TlabChannel *ch,
                                    uintptr_t n,
                                    double alpha,
                                    double delta,
                                    struct TlabBound *out);

// Approximate converse with the constant term dropped.
//
// # Safety
// `ch` must be a live channel and `out` a valid pointer.
enum TlabStatus tlab_converse_approx(const struct TlabChannel *ch,
                                     uintptr_t n,
                                     double alpha,
                                     struct TlabBound *out);

// Achievability bound; fails with `SampleSizeTooSmall` below the valid range.
//
// # Safety
// `ch` must be a live channel and `out` a valid pointer.
enum TlabStatus tlab_achievability(const struct TlabChannel *ch,
                                   uintptr_t n,
                                   double alpha,
                                   struct TlabBound *out);

// `GJS(P1, P2, alpha)` for two distributions of length `k`.
//
// # Safety
// `p1` and `p2` must point to `k` doubles; `out` must be valid.
enum TlabStatus tlab_gjs(const double *p1,
                         const double *p2,
                         uintptr_t k,
                         double alpha,
                         double *out);

// `F(P1, P2)`: the minimum of `D(Q2||P2) + alpha D(Q1||P1)` subject to
// `GJS(Q1, Q2, alpha) <= lambda`.
//
// # Safety
// `p1` and `p2` must point to `k` doubles; `out` must be valid.
enum TlabStatus tlab_f_exponent(const double *p1,
                                const double *p2,
                                uintptr_t k,
                                double alpha,
                                double lambda,
                                struct TlabExponent *out);

// Default configuration for `kind` (`bounds_curve`, `bonferroni_compare`,
// `gutman_sim`, `exponent_table`, `theorem1_audit`), with the fields of the
// JSON object `overrides` applied when it is non-null.
//
// # Safety
// `kind` must be a NUL-terminated string, `overrides` null or
// NUL-terminated, and `out` a valid pointer.
enum TlabStatus tlab_config_new(const char *kind, const char *overrides, struct TlabConfig **out);

// Releases a configuration. Null is ignored.
//
// # Safety
// `cfg` must come from `tlab_config_new` and not be used again.
void tlab_config_free(struct TlabConfig *cfg);

// Runs the experiment and writes it to `path` in the configured format and
// log base.
//
// # Safety
// `cfg` must be a live configuration and `path` a NUL-terminated string.
enum TlabStatus tlab_run_experiment(const struct TlabConfig *cfg, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TLAB_H */
