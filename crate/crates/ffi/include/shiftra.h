#ifndef SHIFTRA_H
#define SHIFTRA_H

/* Generated by cbindgen from shiftra-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SHIFTRA_OK 0

#define SHIFTRA_ERR_INPUT 2

#define SHIFTRA_ERR_NUMERIC 3

#define SHIFTRA_ERR_NULL 4

#define SHIFTRA_ERR_UTF8 5

#define SHIFTRA_ERR_STATE 6

/**
 * Opaque analysis session. Create with [`shiftra_session_new`], destroy
 * with [`shiftra_session_free`]. Not thread-safe; use one per thread.
 */
typedef struct ShiftraSession ShiftraSession;

/**
 * Allocate a fresh session.
 */
struct ShiftraSession *shiftra_session_new(void);

/**
 * Destroy a session created by [`shiftra_session_new`].
 *
 * # Safety
 * `session` must be a pointer returned by [`shiftra_session_new`] that has
 * not been freed already, or null (a no-op).
 */
void shiftra_session_free(struct ShiftraSession *session);

/**
 * Message for the most recent failure on this session, or null if the last
 * call succeeded. The pointer is owned by the session and valid until the
 * next call on it.
 *
 * # Safety
 * `session` must be a live session pointer or null.
 */
const char *shiftra_last_error(const struct ShiftraSession *session);

/**
 * Load one winter from `demand_path`/`weather_path` CSV files. Winters must
 * be added in ascending id order before calling [`shiftra_fit`].
 *
 * # Safety
 * `session` must be a live session pointer; the path arguments must be
 * NUL-terminated strings.
 */
int32_t shiftra_add_winter(struct ShiftraSession *session,
                           const char *demand_path,
                           const char *weather_path,
                           int32_t winter_id);

/**
 * Fit the demand model on the loaded winters.
 *
 * # Safety
 * `session` must be a live session pointer.
 */
int32_t shiftra_fit(struct ShiftraSession *session);

/**
 * Serialize the current fit as JSON. The returned string must be released
 * with [`shiftra_string_free`]; null is returned on failure.
 *
 * # Safety
 * `session` must be a live session pointer.
 */
char *shiftra_fit_to_json(struct ShiftraSession *session);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `text` must be a pointer returned by [`shiftra_fit_to_json`] that has not
 * been freed already, or null (a no-op).
 */
void shiftra_string_free(char *text);

/**
 * Load the generating fleet from CSV and convolve it on `grid_step_mw`.
 *
 * # Safety
 * `session` must be a live session pointer; `path` must be a
 * NUL-terminated string.
 */
int32_t shiftra_load_fleet(struct ShiftraSession *session, const char *path, uint32_t grid_step_mw);

/**
 * Load scenarios from JSON.
 *
 * # Safety
 * `session` must be a live session pointer; `path` must be a
 * NUL-terminated string.
 */
int32_t shiftra_load_scenarios(struct ShiftraSession *session, const char *path);

/**
 * Calibrate `scenario_id`'s year effect so the mean metric across the
 * loaded winters hits `target`. `metric` is 0 for daily LOLE, 1 for hourly
 * LOLH; `mode` is 0 empirical, 1 stochastic. Writes the calibrated phi (MW)
 * and the achieved metric through the out pointers and stores phi on the
 * session's scenario for later evaluation calls.
 *
 * # Safety
 * `session` must be a live session pointer; `scenario_id` must be a
 * NUL-terminated string; `phi_mw_out` and `achieved_out` must be valid for
 * writes or null (the value is then discarded).
 */
int32_t shiftra_calibrate(struct ShiftraSession *session,
                          const char *scenario_id,
                          int32_t metric,
                          int32_t mode,
                          double target,
                          double *phi_mw_out,
                          double *achieved_out);

/**
 * Mean LOLE (days/winter) across the loaded winters for `scenario_id`
 * under weather shift `tau` days and day-of-week rotation `k`, written to
 * `lole_out`. `mode` is 0 empirical, 1 stochastic.
 *
 * # Safety
 * `session` must be a live session pointer; `scenario_id` must be a
 * NUL-terminated string; `lole_out` must be valid for a write.
 */
int32_t shiftra_lole(struct ShiftraSession *session,
                     const char *scenario_id,
                     int32_t mode,
                     int32_t tau,
                     int32_t k,
                     double *lole_out);

/**
 * Mean LOLH (hours/winter) across the loaded winters, analogous to
 * [`shiftra_lole`]; requires hourly demand data.
 *
 * # Safety
 * Same contract as [`shiftra_lole`] with `lolh_out` valid for a write.
 */
int32_t shiftra_lolh(struct ShiftraSession *session,
                     const char *scenario_id,
                     int32_t mode,
                     int32_t tau,
                     int32_t k,
                     double *lolh_out);

#endif  /* SHIFTRA_H */
