#ifndef MPSIM_H
#define MPSIM_H

/* Generated by cbindgen from crates/ffi. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum MpsimStatus {
  MPSIM_STATUS_OK = 0,
  MPSIM_STATUS_NULL_POINTER = 1,
  MPSIM_STATUS_INVALID_UTF8 = 2,
  MPSIM_STATUS_PARSE_ERROR = 3,
  MPSIM_STATUS_VALIDATION_ERROR = 4,
  MPSIM_STATUS_UNKNOWN_STRATEGY = 5,
  MPSIM_STATUS_INVALID_ARGUMENT = 6,
  MPSIM_STATUS_SIMULATION_ERROR = 7,
  MPSIM_STATUS_OUT_OF_RANGE = 8,
  MPSIM_STATUS_PANIC = 9,
} MpsimStatus;

/**
 * Opaque handle to the telemetry of one finished run.
 */
typedef struct MpsimTelemetry MpsimTelemetry;

/**
 * Opaque topology handle.
 */
typedef struct MpsimTopology MpsimTopology;

/**
 * Parameters of a single run. Obtain defaults from
 * [`mpsim_run_params_default`] and override fields as needed.
 */
typedef struct MpsimRunParams {
  /**
   * NUL-terminated strategy name, e.g. `"min_rtt"`.
   */
  const char *strategy;
  size_t agents;
  size_t steps;
  uint64_t seed;
  double epsilon;
  double blest_factor;
} MpsimRunParams;

/**
 * One (step, path) cell of the time series.
 */
typedef struct MpsimStepSample {
  double load_mbps;
  double overflow_mbps;
  double inst_rtt_ms;
} MpsimStepSample;

typedef struct MpsimScores {
  double oscillation;
  double loss;
  double fairness;
  double efficiency;
  double goodput;
  double stability;
  double loss_avoidance;
} MpsimScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mpsim_last_error_message(void);

/**
 * Number of built-in strategies.
 */
size_t mpsim_strategy_count(void);

/**
 * Static, NUL-terminated name of strategy `index`, or NULL when out of range.
 */
const char *mpsim_strategy_name(size_t index);

/**
 * The built-in three-path topology. Release with [`mpsim_topology_free`].
 */
struct MpsimTopology *mpsim_topology_default(void);

/**
 * Parses a JSON topology into `*out`.
 *
 * # Safety
 *
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum MpsimStatus mpsim_topology_parse(const char *json, struct MpsimTopology **out);

/**
 * Number of paths, or 0 for NULL.
 *
 * # Safety
 *
 * `topology` must be NULL or a live handle.
 */
size_t mpsim_topology_path_count(const struct MpsimTopology *topology);

/**
 * # Safety
 *
 * `topology` must be NULL or a handle not yet freed.
 */
void mpsim_topology_free(struct MpsimTopology *topology);

/**
 * Defaults: `min_rtt`, 10 agents, 300 steps, seed 0, epsilon 0.1, BLEST
 * factor 1.5.
 */
struct MpsimRunParams mpsim_run_params_default(void);

/**
 * Runs one simulation and stores its telemetry in `*out`.
 *
 * # Safety
 *
 * `topology` must be a live handle, `params` and `out` valid pointers, and
 * `params->strategy` a NUL-terminated string.
 */
enum MpsimStatus mpsim_run(const struct MpsimTopology *topology,
                           const struct MpsimRunParams *params,
                           struct MpsimTelemetry **out);

/**
 * # Safety
 *
 * `telemetry` must be NULL or a live handle.
 */
size_t mpsim_telemetry_step_count(const struct MpsimTelemetry *telemetry);

/**
 * # Safety
 *
 * `telemetry` must be NULL or a live handle.
 */
size_t mpsim_telemetry_path_count(const struct MpsimTelemetry *telemetry);

/**
 * # Safety
 *
 * `telemetry` must be NULL or a live handle.
 */
size_t mpsim_telemetry_agent_count(const struct MpsimTelemetry *telemetry);

/**
 * Load, overflow and RTT of path `path_index` (0-based) at `step`.
 *
 * # Safety
 *
 * `telemetry` must be a live handle and `out` a valid pointer.
 */
enum MpsimStatus mpsim_telemetry_sample(const struct MpsimTelemetry *telemetry,
                                        size_t step,
                                        size_t path_index,
                                        struct MpsimStepSample *out);

/**
 * Copies the final per-agent windows into `buffer`, which must hold at
 * least `mpsim_telemetry_agent_count` doubles.
 *
 * # Safety
 *
 * `buffer` must be valid for `len` writes of `double`.
 */
enum MpsimStatus mpsim_telemetry_final_cwnds(const struct MpsimTelemetry *telemetry,
                                             double *buffer,
                                             size_t len);

/**
 * Scores the run.
 *
 * # Safety
 *
 * `telemetry` must be a live handle and `out` a valid pointer.
 */
enum MpsimStatus mpsim_telemetry_score(const struct MpsimTelemetry *telemetry,
                                       struct MpsimScores *out);

/**
 * Time-series CSV (`step,path_id,load_mbps,overflow_mbps,inst_rtt_ms`).
 * Returns NULL for a NULL handle; release with [`mpsim_string_free`].
 *
 * # Safety
 *
 * `telemetry` must be NULL or a live handle.
 */
char *mpsim_telemetry_timeseries_csv(const struct MpsimTelemetry *telemetry);

/**
 * # Safety
 *
 * `telemetry` must be NULL or a handle not yet freed.
 */
void mpsim_telemetry_free(struct MpsimTelemetry *telemetry);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 *
 * `s` must be NULL or a pointer obtained from this library, freed once.
 */
void mpsim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPSIM_H */
