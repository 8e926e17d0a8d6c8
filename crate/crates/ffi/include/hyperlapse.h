#ifndef HYPERLAPSE_H
#define HYPERLAPSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HlStatus {
  HlStatus_Ok = 0,
  HlStatus_NullPointer = 1,
  HlStatus_InvalidUtf8 = 2,
  HlStatus_Io = 3,
  HlStatus_Parse = 4,
  HlStatus_Invariant = 5,
  HlStatus_NoPath = 6,
  HlStatus_InvalidArgument = 7,
  HlStatus_Panic = 8,
} HlStatus;

typedef enum HlSolver {
  HlSolver_DagDp = 0,
  HlSolver_Dijkstra = 1,
} HlSolver;

/**
 * Opaque frame-sampling plan.
 */
typedef struct HlPlan HlPlan;

/**
 * Opaque motion trace.
 */
typedef struct HlTrace HlTrace;

typedef struct HlWeights {
  double alpha;
  double beta;
  double gamma;
  double foe_penalty_c;
  double k_flow;
} HlWeights;

typedef struct HlGraphSpec {
  size_t n;
  size_t tau;
  size_t d_start;
  size_t d_end;
  struct HlWeights weights;
} HlGraphSpec;

typedef struct HlEvalResult {
  size_t median_skip;
  double jitter_mean;
  double baseline_jitter_mean;
  /**
   * Meaningful only when `improvement_defined` is true.
   */
  double jitter_improvement_pct;
  bool improvement_defined;
  bool flow_starved;
} HlEvalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null. Valid
 * until the next call into the library on this thread.
 */
const char *hl_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *hl_version(void);

/**
 * Loads and validates a trace file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HlStatus hl_trace_load(const char *path, struct HlTrace **out);

/**
 * Parses and validates a trace from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HlStatus hl_trace_from_json(const char *json, struct HlTrace **out);

/**
 * Releases a trace. Null is ignored.
 *
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void hl_trace_free(struct HlTrace *trace);

/**
 * Number of frames, or 0 for null.
 *
 * # Safety
 * `trace` must be null or a live trace handle.
 */
size_t hl_trace_frame_count(const struct HlTrace *trace);

/**
 * Mean consecutive-frame flow.
 *
 * # Safety
 * `trace` must be a live trace handle and `out` writable.
 */
enum HlStatus hl_trace_avg_flow(const struct HlTrace *trace, double *out);

/**
 * Default frame-sampling weights for the given desired flow per step.
 */
struct HlWeights hl_weights_default(double k_flow);

/**
 * Default graph parameters for `trace` at the given speedup, with the skip
 * bound and end windows clamped to the trace length.
 *
 * # Safety
 * `trace` must be a live trace handle and `out` writable.
 */
enum HlStatus hl_graph_spec_default(const struct HlTrace *trace,
                                    double speedup,
                                    struct HlGraphSpec *out);

/**
 * First-order sampling plan.
 *
 * # Safety
 * `trace` and `spec` must be valid pointers and `out` writable.
 */
enum HlStatus hl_solve_first_order(const struct HlTrace *trace,
                                   const struct HlGraphSpec *spec,
                                   enum HlSolver solver,
                                   struct HlPlan **out);

/**
 * Second-order sampling plan. A NaN `alpha2` uses the shakiness weight.
 *
 * # Safety
 * `trace` and `spec` must be valid pointers and `out` writable.
 */
enum HlStatus hl_solve_second_order(const struct HlTrace *trace,
                                    const struct HlGraphSpec *spec,
                                    enum HlSolver solver,
                                    double alpha2,
                                    struct HlPlan **out);

/**
 * Number of selected frames, or 0 for null.
 *
 * # Safety
 * `plan` must be null or a live plan handle.
 */
size_t hl_plan_len(const struct HlPlan *plan);

/**
 * Copies up to `capacity` selected frame indices into `buf` and stores the
 * full count in `written`.
 *
 * # Safety
 * `buf` must hold `capacity` elements; `written` must be writable.
 */
enum HlStatus hl_plan_selected(const struct HlPlan *plan,
                               size_t *buf,
                               size_t capacity,
                               size_t *written);

/**
 * Total cost of the plan, or NaN for null.
 *
 * # Safety
 * `plan` must be null or a live plan handle.
 */
double hl_plan_total_cost(const struct HlPlan *plan);

/**
 * Plan as JSON; release the string with `hl_string_free`.
 *
 * # Safety
 * `plan` must be a live plan handle and `out` writable.
 */
enum HlStatus hl_plan_to_json(const struct HlPlan *plan, char **out);

/**
 * Releases a plan. Null is ignored.
 *
 * # Safety
 * `plan` must come from this library and not be used afterwards.
 */
void hl_plan_free(struct HlPlan *plan);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hl_string_free(char *s);

/**
 * Plan metrics against a uniform baseline with the given skip, using the
 * plan-jitter denominator.
 *
 * # Safety
 * `trace` and `plan` must be live handles and `out` writable.
 */
enum HlStatus hl_eval_plan(const struct HlTrace *trace,
                           const struct HlPlan *plan,
                           const struct HlGraphSpec *spec,
                           size_t baseline_skip,
                           struct HlEvalResult *out);

/**
 * Smooths `n` crop centers given as interleaved `x, y` pairs in `mass_xy`,
 * writing `n` pairs to `out_xy`.
 *
 * # Safety
 * Both arrays must hold `2 * n` doubles.
 */
enum HlStatus hl_smooth_crop_path(const double *mass_xy, size_t n, double lambda, double *out_xy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERLAPSE_H */
