#ifndef QMC_H
#define QMC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QmcStatus {
  QMC_STATUS_OK = 0,
  QMC_STATUS_NULL_POINTER = 1,
  QMC_STATUS_INVALID_UTF8 = 2,
  QMC_STATUS_IO = 3,
  QMC_STATUS_CONFIG = 4,
  QMC_STATUS_PIPELINE = 5,
  QMC_STATUS_SPEC = 6,
  /**
   * The purification target is unreachable; stats hold the saturated fidelity.
   */
  QMC_STATUS_SATURATED = 7,
  /**
   * The field path does not exist or has no value.
   */
  QMC_STATUS_NOT_FOUND = 8,
  QMC_STATUS_PANIC = 9,
} QmcStatus;

/**
 * Opaque architecture config.
 */
typedef struct QmcConfig QmcConfig;

/**
 * Opaque resource report.
 */
typedef struct QmcReport QmcReport;

/**
 * Completion-time statistics of one purified link, in pulse slots.
 */
typedef struct QmcPulseStats {
  double mean;
  double rms;
  /**
   * Final pair fidelity, or the saturated fidelity when the call
   * returns `QMC_STATUS_SATURATED`.
   */
  double final_fidelity;
  /**
   * Purification rounds (Markov mode).
   */
  uint32_t levels;
  /**
   * Standard error of the mean (Monte Carlo mode).
   */
  double std_error;
} QmcPulseStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *qmc_last_error(void);

/**
 * Library version, static string.
 */
const char *qmc_version(void);

/**
 * The built-in 2048-bit baseline config. Never null.
 */
struct QmcConfig *qmc_config_baseline(void);

/**
 * Load a TOML config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QmcStatus qmc_config_from_path(const char *path, struct QmcConfig **out);

/**
 * Parse a TOML config from a string.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum QmcStatus qmc_config_from_str(const char *text, struct QmcConfig **out);

/**
 * Set a numeric config key (e.g. `p_lat`, `purification.kappa`) in its units.
 * The config is unchanged on failure.
 *
 * # Safety
 * `config` must come from this library; `key` must be NUL-terminated.
 */
enum QmcStatus qmc_config_set(struct QmcConfig *config, const char *key, double value);

/**
 * Read a numeric config key. Unset optional keys give `QMC_STATUS_NOT_FOUND`.
 *
 * # Safety
 * `config` must come from this library; `key` must be NUL-terminated;
 * `out` must be writable.
 */
enum QmcStatus qmc_config_get(const struct QmcConfig *config, const char *key, double *out);

/**
 * Config as TOML. Free with `qmc_string_free`.
 *
 * # Safety
 * `config` must come from this library.
 */
char *qmc_config_to_toml(const struct QmcConfig *config);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards. Null is ignored.
 */
void qmc_config_free(struct QmcConfig *config);

/**
 * Evaluate the full resource report for a config.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum QmcStatus qmc_report_new(const struct QmcConfig *config, struct QmcReport **out);

/**
 * Numeric report field at a dotted path such as `workload.t_total_days`.
 * Booleans read as 0 or 1.
 *
 * # Safety
 * `report` must come from this library; `path` must be NUL-terminated;
 * `out` must be writable.
 */
enum QmcStatus qmc_report_field(const struct QmcReport *report, const char *path, double *out);

/**
 * 1 if the report carries a feasibility violation, 0 if not, -1 on null.
 *
 * # Safety
 * `report` must come from this library.
 */
int32_t qmc_report_has_violation(const struct QmcReport *report);

/**
 * Report as pretty JSON. Free with `qmc_string_free`.
 *
 * # Safety
 * `report` must come from this library.
 */
char *qmc_report_json(const struct QmcReport *report);

/**
 * Report as an aligned text table. Free with `qmc_string_free`.
 *
 * # Safety
 * `report` must come from this library.
 */
char *qmc_report_text(const struct QmcReport *report);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards. Null is ignored.
 */
void qmc_report_free(struct QmcReport *report);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void qmc_string_free(char *s);

/**
 * Exact (absorbing-chain) purification cost of one link.
 * `loss_db` in dB, `eps_local` as a fraction. On `QMC_STATUS_SATURATED`,
 * `out->final_fidelity` holds the saturated fidelity.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum QmcStatus qmc_purify_markov(const struct QmcConfig *config,
                                 double loss_db,
                                 double eps_local,
                                 double f_target,
                                 struct QmcPulseStats *out);

/**
 * Seeded Monte Carlo purification cost of one link.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum QmcStatus qmc_purify_monte_carlo(const struct QmcConfig *config,
                                      double loss_db,
                                      double eps_local,
                                      double f_target,
                                      size_t trials,
                                      uint64_t seed,
                                      struct QmcPulseStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMC_H */
