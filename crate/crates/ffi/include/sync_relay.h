#ifndef SYNC_RELAY_H
#define SYNC_RELAY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Trip flag bits: OC = 1, OV = 2, UV = 4, OF = 8, UF = 16.
 */
#define SR_TRIP_OC 1

#define SR_TRIP_OV 2

#define SR_TRIP_UV 4

#define SR_TRIP_OF 8

#define SR_TRIP_UF 16

typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_NULL_POINTER = 1,
  SR_STATUS_INVALID_UTF8 = 2,
  SR_STATUS_INVALID_ARGUMENT = 3,
  SR_STATUS_INSUFFICIENT_SIGNAL = 4,
  SR_STATUS_INVALID_STATE = 5,
  SR_STATUS_STALE_MEASUREMENT = 6,
  SR_STATUS_NUMERICAL_DIVERGENCE = 7,
  SR_STATUS_PARSE = 8,
  SR_STATUS_CONFIG = 9,
  SR_STATUS_OUT_OF_RANGE = 10,
  SR_STATUS_PANIC = 11,
} SrStatus;

typedef enum SrSyncPhase {
  SR_SYNC_PHASE_IDLE = 0,
  SR_SYNC_PHASE_EXCITER_ON = 1,
  SR_SYNC_PHASE_MATCHING = 2,
  SR_SYNC_PHASE_HOLD_WINDOW = 3,
  SR_SYNC_PHASE_CLOSE_ISSUED = 4,
  SR_SYNC_PHASE_SYNCHRONIZED = 5,
  SR_SYNC_PHASE_ABORTED = 6,
} SrSyncPhase;

/**
 * Opaque finished simulation log.
 */
typedef struct SrLog SrLog;

/**
 * Opaque scenario configuration.
 */
typedef struct SrScenario SrScenario;

/**
 * Opaque step-by-step simulation.
 */
typedef struct SrSimulator SrSimulator;

/**
 * One logged plant step.
 */
typedef struct SrRow {
  double t;
  double gen_rpm;
  double gen_freq;
  double grid_freq;
  double gen_v_ll;
  double grid_v_ll;
  double dphi_deg;
  double field_v;
  double torque_cmd;
  bool breaker;
  enum SrSyncPhase sync_phase;
  double p_w;
  double q_var;
  uint32_t trip_flags;
} SrRow;

/**
 * Headline metrics. Quantities that do not exist for the run (no close,
 * empty log) are NaN.
 */
typedef struct SrSummary {
  bool synced;
  double t_close;
  double close_dphi;
  double close_slip;
  double close_dv;
  double settle_time;
  double final_rpm;
  double final_v_ll;
  double final_field;
  uint32_t trip_count;
  /**
   * Union of tripped elements, same bits as [`SrRow::trip_flags`].
   */
  uint32_t trip_flags;
  /**
   * Time of the first trip, NaN without trips.
   */
  double first_trip_t;
} SrSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *sr_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next API call on the same thread.
 */
const char *sr_last_error(void);

/**
 * Static name of a status code.
 */
const char *sr_status_name(enum SrStatus status);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer returned through a `char **` out-parameter
 * of this library that has not been freed.
 */
void sr_string_free(char *s);

/**
 * New scenario holding the default configuration.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum SrStatus sr_scenario_default(struct SrScenario **out);

/**
 * Parse and validate a scenario document.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string; `out` null or writable.
 */
enum SrStatus sr_scenario_parse(const char *text_ptr, struct SrScenario **out);

/**
 * Set one key from its scenario-file text. The configuration is validated
 * when a simulation is created from it.
 *
 * # Safety
 * `scenario` must be a live handle or null; strings NUL-terminated or null.
 */
enum SrStatus sr_scenario_set(struct SrScenario *scenario, const char *key, const char *value);

/**
 * Current value of `key` in scenario-file syntax.
 *
 * # Safety
 * As for [`sr_scenario_set`]; `out` must be writable.
 */
enum SrStatus sr_scenario_get(const struct SrScenario *scenario, const char *key, char **out);

/**
 * Check the whole configuration.
 *
 * # Safety
 * `scenario` must be a live handle or null.
 */
enum SrStatus sr_scenario_validate(const struct SrScenario *scenario);

/**
 * Every key with its value, one `key = value` per line.
 *
 * # Safety
 * `scenario` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_scenario_to_text(const struct SrScenario *scenario, char **out);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void sr_scenario_free(struct SrScenario *scenario);

/**
 * Run a scenario to completion. On numerical divergence the status is
 * `NumericalDivergence` and `*out` still receives the partial log.
 *
 * # Safety
 * `scenario` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_run(const struct SrScenario *scenario, struct SrLog **out);

/**
 * Create a simulation positioned before its first step.
 *
 * # Safety
 * `scenario` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_simulator_new(const struct SrScenario *scenario, struct SrSimulator **out);

/**
 * Advance one plant step. `*running` is false once the last row is written.
 *
 * # Safety
 * `sim` must be a live handle or null; `running` writable or null.
 */
enum SrStatus sr_simulator_step(struct SrSimulator *sim, bool *running);

/**
 * Most recent log row. `OutOfRange` before the first step.
 *
 * # Safety
 * `sim` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_simulator_last_row(const struct SrSimulator *sim, struct SrRow *out);

/**
 * Simulated time of the next step, s.
 *
 * # Safety
 * `sim` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_simulator_time(const struct SrSimulator *sim, double *out);

/**
 * Consume the simulation and hand over its log. `sim` is freed even on error.
 *
 * # Safety
 * `sim` must be null or a handle not yet freed; `out` writable.
 */
enum SrStatus sr_simulator_into_log(struct SrSimulator *sim, struct SrLog **out);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void sr_simulator_free(struct SrSimulator *sim);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `log` must be a live handle or null.
 */
size_t sr_log_row_count(const struct SrLog *log);

/**
 * Number of events; 0 for a null handle.
 *
 * # Safety
 * `log` must be a live handle or null.
 */
size_t sr_log_event_count(const struct SrLog *log);

/**
 * Row `index`.
 *
 * # Safety
 * `log` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_log_row(const struct SrLog *log, size_t index, struct SrRow *out);

/**
 * Per-step CSV with `precision` decimals.
 *
 * # Safety
 * `log` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_log_csv(const struct SrLog *log, uint32_t precision, char **out);

/**
 * Event log CSV with `precision` decimals.
 *
 * # Safety
 * `log` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_log_events_csv(const struct SrLog *log, uint32_t precision, char **out);

/**
 * Headline metrics of the run.
 *
 * # Safety
 * `log` must be a live handle or null; `out` writable.
 */
enum SrStatus sr_log_summary(const struct SrLog *log, struct SrSummary *out);

/**
 * # Safety
 * `log` must be null or a handle not yet freed.
 */
void sr_log_free(struct SrLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNC_RELAY_H */
