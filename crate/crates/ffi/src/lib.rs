//! C ABI over the adequacy pipeline: load winters, fit, load a fleet and
//! scenarios, then calibrate and evaluate LOLE/LOLH through an opaque
//! session handle.
//!
//! Every function returns a status code: 0 success, 2 input error, 3
//! numerical/contract error, 4 null argument, 5 invalid UTF-8, 6 call out
//! of order (e.g. risk before fit). On failure the session stores a
//! message retrievable with [`shiftra_last_error`]. The generated header
//! lands in `include/shiftra.h`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use shiftra::adequacy::{
    calibrate_year_effect, convolve_fleet, load_fleet, lole, lolh, smear_gaussian,
    CapacityDistribution, RiskMetric,
};
use shiftra::demand::{build_design_matrix, fit_ols, fit_to_json, RegressionFit};
use shiftra::ingest::{load_winter, WinterDataset};
use shiftra::scenario::{load_scenarios, map_to_scenario, shift_dow, shift_weather, ResidualMode, Scenario};
use shiftra::Error;

pub const SHIFTRA_OK: i32 = 0;
pub const SHIFTRA_ERR_INPUT: i32 = 2;
pub const SHIFTRA_ERR_NUMERIC: i32 = 3;
pub const SHIFTRA_ERR_NULL: i32 = 4;
pub const SHIFTRA_ERR_UTF8: i32 = 5;
pub const SHIFTRA_ERR_STATE: i32 = 6;

/// Opaque analysis session. Create with [`shiftra_session_new`], destroy
/// with [`shiftra_session_free`]. Not thread-safe; use one per thread.
pub struct ShiftraSession {
    winters: Vec<WinterDataset>,
    fit: Option<RegressionFit>,
    dist: Option<CapacityDistribution>,
    smeared: Option<CapacityDistribution>,
    scenarios: Vec<Scenario>,
    last_error: Option<CString>,
}

impl ShiftraSession {
    fn set_error(&mut self, message: &str) {
        let clean: String = message.chars().filter(|c| *c != '\0').collect();
        self.last_error = Some(CString::new(clean).unwrap());
    }

    fn fail(&mut self, err: &Error) -> i32 {
        self.set_error(&err.to_string());
        err.exit_code()
    }

    fn state(&mut self, message: &str) -> i32 {
        self.set_error(message);
        SHIFTRA_ERR_STATE
    }
}

fn guarded(session: *mut ShiftraSession, body: impl FnOnce(&mut ShiftraSession) -> i32) -> i32 {
    if session.is_null() {
        return SHIFTRA_ERR_NULL;
    }
    let session = unsafe { &mut *session };
    match catch_unwind(AssertUnwindSafe(|| body(session))) {
        Ok(code) => code,
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            session.set_error(&format!("internal panic: {message}"));
            SHIFTRA_ERR_NUMERIC
        }
    }
}

fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, i32> {
    str_arg(ptr).map(Path::new)
}

fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(SHIFTRA_ERR_NULL);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| SHIFTRA_ERR_UTF8)
}

/// Allocate a fresh session.
#[no_mangle]
pub extern "C" fn shiftra_session_new() -> *mut ShiftraSession {
    Box::into_raw(Box::new(ShiftraSession {
        winters: Vec::new(),
        fit: None,
        dist: None,
        smeared: None,
        scenarios: Vec::new(),
        last_error: None,
    }))
}

/// Destroy a session created by [`shiftra_session_new`].
///
/// # Safety
/// `session` must be a pointer returned by [`shiftra_session_new`] that has
/// not been freed already, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn shiftra_session_free(session: *mut ShiftraSession) {
    if !session.is_null() {
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Message for the most recent failure on this session, or null if the last
/// call succeeded. The pointer is owned by the session and valid until the
/// next call on it.
///
/// # Safety
/// `session` must be a live session pointer or null.
#[no_mangle]
pub unsafe extern "C" fn shiftra_last_error(session: *const ShiftraSession) -> *const c_char {
    if session.is_null() {
        return std::ptr::null();
    }
    match &unsafe { &*session }.last_error {
        Some(message) => message.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Load one winter from `demand_path`/`weather_path` CSV files. Winters must
/// be added in ascending id order before calling [`shiftra_fit`].
///
/// # Safety
/// `session` must be a live session pointer; the path arguments must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn shiftra_add_winter(
    session: *mut ShiftraSession,
    demand_path: *const c_char,
    weather_path: *const c_char,
    winter_id: i32,
) -> i32 {
    guarded(session, |s| {
        let demand = match path_arg(demand_path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let weather = match path_arg(weather_path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        if s.winters.iter().any(|w| w.winter_id() >= winter_id) {
            return s.state("winters must be added in ascending id order");
        }
        match load_winter(demand, weather, winter_id) {
            Ok(ds) => {
                s.winters.push(ds);
                s.fit = None;
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(e) => s.fail(&e),
        }
    })
}

/// Fit the demand model on the loaded winters.
///
/// # Safety
/// `session` must be a live session pointer.
#[no_mangle]
pub unsafe extern "C" fn shiftra_fit(session: *mut ShiftraSession) -> i32 {
    guarded(session, |s| {
        if s.winters.is_empty() {
            return s.state("no winters loaded");
        }
        let design = match build_design_matrix(&s.winters) {
            Ok(d) => d,
            Err(e) => return s.fail(&e),
        };
        match fit_ols(&design) {
            Ok(fit) => {
                s.fit = Some(fit);
                s.smeared = None;
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(e) => s.fail(&e),
        }
    })
}

/// Serialize the current fit as JSON. The returned string must be released
/// with [`shiftra_string_free`]; null is returned on failure.
///
/// # Safety
/// `session` must be a live session pointer.
#[no_mangle]
pub unsafe extern "C" fn shiftra_fit_to_json(session: *mut ShiftraSession) -> *mut c_char {
    if session.is_null() {
        return std::ptr::null_mut();
    }
    let s = unsafe { &mut *session };
    match &s.fit {
        Some(fit) => {
            let text = fit_to_json(fit);
            s.last_error = None;
            CString::new(text).map(CString::into_raw).unwrap_or(std::ptr::null_mut())
        }
        None => {
            s.set_error("no fit available; call shiftra_fit first");
            std::ptr::null_mut()
        }
    }
}

/// Release a string returned by this library.
///
/// # Safety
/// `text` must be a pointer returned by [`shiftra_fit_to_json`] that has not
/// been freed already, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn shiftra_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(unsafe { CString::from_raw(text) });
    }
}

/// Load the generating fleet from CSV and convolve it on `grid_step_mw`.
///
/// # Safety
/// `session` must be a live session pointer; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shiftra_load_fleet(
    session: *mut ShiftraSession,
    path: *const c_char,
    grid_step_mw: u32,
) -> i32 {
    guarded(session, |s| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let units = match load_fleet(path) {
            Ok(u) => u,
            Err(e) => return s.fail(&e),
        };
        match convolve_fleet(&units, grid_step_mw) {
            Ok(dist) => {
                s.dist = Some(dist);
                s.smeared = None;
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(e) => s.fail(&e),
        }
    })
}

/// Load scenarios from JSON.
///
/// # Safety
/// `session` must be a live session pointer; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shiftra_load_scenarios(
    session: *mut ShiftraSession,
    path: *const c_char,
) -> i32 {
    guarded(session, |s| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match load_scenarios(path) {
            Ok(scenarios) => {
                s.scenarios = scenarios;
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(e) => s.fail(&e),
        }
    })
}

fn find_scenario(scenarios: &[Scenario], id: &str) -> Option<usize> {
    scenarios.iter().position(|sc| sc.id == id)
}

impl ShiftraSession {
    fn ready(&mut self) -> Result<(), i32> {
        if self.winters.is_empty() {
            return Err(self.state("no winters loaded"));
        }
        if self.fit.is_none() {
            return Err(self.state("no fit available; call shiftra_fit first"));
        }
        if self.dist.is_none() {
            return Err(self.state("no fleet loaded"));
        }
        Ok(())
    }

    /// The exact distribution for empirical mode, or the one smeared with
    /// the fit's residual sd for stochastic mode (built lazily, reused).
    fn dist_for(&mut self, mode: ResidualMode) -> Result<CapacityDistribution, i32> {
        let dist = self.dist.clone().expect("checked by ready()");
        match mode {
            ResidualMode::Empirical => Ok(dist),
            ResidualMode::Stochastic => {
                if self.smeared.is_none() {
                    let sd = self.fit.as_ref().expect("checked by ready()").residual_sd;
                    match smear_gaussian(&dist, sd) {
                        Ok(sm) => self.smeared = Some(sm),
                        Err(e) => {
                            let code = self.fail(&e);
                            return Err(code);
                        }
                    }
                }
                Ok(self.smeared.clone().unwrap())
            }
        }
    }
}

fn mode_arg(mode: i32) -> Option<ResidualMode> {
    match mode {
        0 => Some(ResidualMode::Empirical),
        1 => Some(ResidualMode::Stochastic),
        _ => None,
    }
}

/// Calibrate `scenario_id`'s year effect so the mean metric across the
/// loaded winters hits `target`. `metric` is 0 for daily LOLE, 1 for hourly
/// LOLH; `mode` is 0 empirical, 1 stochastic. Writes the calibrated phi (MW)
/// and the achieved metric through the out pointers and stores phi on the
/// session's scenario for later evaluation calls.
///
/// # Safety
/// `session` must be a live session pointer; `scenario_id` must be a
/// NUL-terminated string; `phi_mw_out` and `achieved_out` must be valid for
/// writes or null (the value is then discarded).
#[no_mangle]
pub unsafe extern "C" fn shiftra_calibrate(
    session: *mut ShiftraSession,
    scenario_id: *const c_char,
    metric: i32,
    mode: i32,
    target: f64,
    phi_mw_out: *mut f64,
    achieved_out: *mut f64,
) -> i32 {
    guarded(session, |s| {
        let id = match str_arg(scenario_id) {
            Ok(v) => v,
            Err(code) => return code,
        };
        if let Err(code) = s.ready() {
            return code;
        }
        let metric = match metric {
            0 => RiskMetric::DailyLole,
            1 => RiskMetric::HourlyLolh,
            _ => return s.state("metric must be 0 (daily LOLE) or 1 (hourly LOLH)"),
        };
        let mode = match mode_arg(mode) {
            Some(m) => m,
            None => return s.state("mode must be 0 (empirical) or 1 (stochastic)"),
        };
        let Some(index) = find_scenario(&s.scenarios, id) else {
            return s.state(&format!("unknown scenario {id:?}"));
        };
        let fit = s.fit.clone().expect("checked by ready()");
        let dist = s.dist.clone().expect("checked by ready()");
        let result = calibrate_year_effect(
            &fit,
            &s.winters,
            &s.scenarios[index],
            &dist,
            metric,
            mode,
            target,
        );
        match result {
            Ok(cal) => {
                s.scenarios[index] = s.scenarios[index].clone().with_phi(cal.phi_mw);
                if !phi_mw_out.is_null() {
                    unsafe { *phi_mw_out = cal.phi_mw };
                }
                if !achieved_out.is_null() {
                    unsafe { *achieved_out = cal.achieved };
                }
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(e) => s.fail(&e),
        }
    })
}

fn accumulate_risk(
    winters: &[WinterDataset],
    fit: &RegressionFit,
    dist: &CapacityDistribution,
    scenario: &Scenario,
    mode: ResidualMode,
    tau: i32,
    k: i32,
    hourly: bool,
) -> shiftra::Result<(f64, f64)> {
    let mut sum_lole = 0.0;
    let mut sum_lolh = 0.0;
    for data in winters {
        let sd = map_to_scenario(fit, data, scenario)?;
        let sd = shift_dow(&sd, data.calendar(), k)?;
        let (sd, wind) = shift_weather(&sd, data, scenario, tau)?;
        let result = if hourly {
            lolh(dist, &sd, data, &wind, mode)?
        } else {
            lole(dist, &sd, &wind, mode)?
        };
        sum_lole += result.lole;
        sum_lolh += result.lolh.unwrap_or(0.0);
    }
    let n = winters.len() as f64;
    Ok((sum_lole / n, sum_lolh / n))
}

fn risk_for(
    s: &mut ShiftraSession,
    id: &str,
    mode: ResidualMode,
    tau: i32,
    k: i32,
    hourly: bool,
) -> Result<(f64, Option<f64>), i32> {
    let Some(index) = find_scenario(&s.scenarios, id) else {
        return Err(s.state(&format!("unknown scenario {id:?}")));
    };
    let scenario = s.scenarios[index].clone();
    let fit = s.fit.clone().expect("checked by ready()");
    let dist = s.dist_for(mode)?;
    match accumulate_risk(&s.winters, &fit, &dist, &scenario, mode, tau, k, hourly) {
        Ok((mean_lole, mean_lolh)) => {
            Ok((mean_lole, if hourly { Some(mean_lolh) } else { None }))
        }
        Err(e) => Err(s.fail(&e)),
    }
}

/// Mean LOLE (days/winter) across the loaded winters for `scenario_id`
/// under weather shift `tau` days and day-of-week rotation `k`, written to
/// `lole_out`. `mode` is 0 empirical, 1 stochastic.
///
/// # Safety
/// `session` must be a live session pointer; `scenario_id` must be a
/// NUL-terminated string; `lole_out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn shiftra_lole(
    session: *mut ShiftraSession,
    scenario_id: *const c_char,
    mode: i32,
    tau: i32,
    k: i32,
    lole_out: *mut f64,
) -> i32 {
    guarded(session, |s| {
        let id = match str_arg(scenario_id) {
            Ok(v) => v,
            Err(code) => return code,
        };
        if lole_out.is_null() {
            return SHIFTRA_ERR_NULL;
        }
        if let Err(code) = s.ready() {
            return code;
        }
        let mode = match mode_arg(mode) {
            Some(m) => m,
            None => return s.state("mode must be 0 (empirical) or 1 (stochastic)"),
        };
        match risk_for(s, id, mode, tau, k, false) {
            Ok((mean_lole, _)) => {
                unsafe { *lole_out = mean_lole };
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(code) => code,
        }
    })
}

/// Mean LOLH (hours/winter) across the loaded winters, analogous to
/// [`shiftra_lole`]; requires hourly demand data.
///
/// # Safety
/// Same contract as [`shiftra_lole`] with `lolh_out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn shiftra_lolh(
    session: *mut ShiftraSession,
    scenario_id: *const c_char,
    mode: i32,
    tau: i32,
    k: i32,
    lolh_out: *mut f64,
) -> i32 {
    guarded(session, |s| {
        let id = match str_arg(scenario_id) {
            Ok(v) => v,
            Err(code) => return code,
        };
        if lolh_out.is_null() {
            return SHIFTRA_ERR_NULL;
        }
        if let Err(code) = s.ready() {
            return code;
        }
        let mode = match mode_arg(mode) {
            Some(m) => m,
            None => return s.state("mode must be 0 (empirical) or 1 (stochastic)"),
        };
        match risk_for(s, id, mode, tau, k, true) {
            Ok((_, mean_lolh)) => {
                unsafe { *lolh_out = mean_lolh.expect("hourly requested") };
                s.last_error = None;
                SHIFTRA_OK
            }
            Err(code) => code,
        }
    })
}
