//! Scenario mapping and date-shift transforms.
//!
//! A historic winter is mapped into a future supply/demand scenario in two
//! parallel forms:
//!
//! * the *empirical* series keeps each date's fitted residual attached to
//!   it (holiday suppressions, demand-side events travel with their dates);
//! * the *central* series is the bare regression mean under the scenario's
//!   coefficients, for use with a stochastic residual term.
//!
//! Shift transforms then re-align weekday patterns (`k`, in days of week)
//! or the weather (`tau`, in calendar days) against the demand record. Both
//! are pure: a shifted series is a new value, never an in-place edit, and
//! shifting is implemented by re-materialising from the unshifted base so
//! `shift(+x)` followed by `shift(-x)` restores the original bit for bit.

use serde::{Deserialize, Serialize};

use crate::demand::RegressionFit;
use crate::error::{Error, Result};
use crate::ingest::{PaddedDaily, WinterCalendar, WinterDataset};
use crate::weather::{wind_power, WindPowerSeries};

/// A future supply/demand scenario. Internal units are MW; the JSON form
/// mirrors the GW units the scenario tables are quoted in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    /// Demand sensitivity to effective temperature, MW/°C (non-positive).
    pub lambda_mw_per_c: f64,
    /// Demand sensitivity to peak wind speed, MW/(m/s).
    pub gamma_mw_per_ms: f64,
    /// Installed offshore wind capacity, MW.
    pub offshore_mw: f64,
    /// Installed onshore wind capacity, MW.
    pub onshore_mw: f64,
    /// Scenario year effect, MW. `None` until calibrated.
    pub phi_mw: Option<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation {
                what: "scenario",
                detail: "scenario id is empty".into(),
            });
        }
        if !(self.lambda_mw_per_c <= 0.0) {
            return Err(Error::Validation {
                what: "scenario",
                detail: format!(
                    "{}: lambda = {} MW/°C must be <= 0 (demand rises as TE falls)",
                    self.id, self.lambda_mw_per_c
                ),
            });
        }
        if self.offshore_mw < 0.0 || self.onshore_mw < 0.0 {
            return Err(Error::Validation {
                what: "scenario",
                detail: format!("{}: wind capacities must be >= 0", self.id),
            });
        }
        if let Some(phi) = self.phi_mw {
            if !phi.is_finite() {
                return Err(Error::Validation {
                    what: "scenario",
                    detail: format!("{}: phi must be finite", self.id),
                });
            }
        }
        Ok(())
    }

    /// The scenario's year effect; an error while it is still uncalibrated.
    pub fn phi(&self) -> Result<f64> {
        self.phi_mw.ok_or_else(|| {
            Error::Contract(format!(
                "scenario {} has no year effect; calibrate or set phi first",
                self.id
            ))
        })
    }

    /// Copy with the year effect replaced.
    pub fn with_phi(&self, phi_mw: f64) -> Self {
        Self {
            phi_mw: Some(phi_mw),
            ..self.clone()
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFileEntry {
    id: String,
    lambda_gw_per_c: f64,
    gamma_gw_per_ms: f64,
    offshore_gw: f64,
    onshore_gw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_mw: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    scenarios: Vec<ScenarioFileEntry>,
}

/// Parse scenarios from their JSON document. GW fields are converted to MW.
pub fn scenarios_from_json(text: &str, path: &str) -> Result<Vec<Scenario>> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Json {
        path: path.into(),
        detail: e.to_string(),
    })?;
    if file.scenarios.is_empty() {
        return Err(Error::Validation {
            what: "scenario",
            detail: format!("{path}: no scenarios defined"),
        });
    }
    let mut out = Vec::with_capacity(file.scenarios.len());
    for e in file.scenarios {
        let s = Scenario {
            id: e.id,
            lambda_mw_per_c: e.lambda_gw_per_c * 1000.0,
            gamma_mw_per_ms: e.gamma_gw_per_ms * 1000.0,
            offshore_mw: e.offshore_gw * 1000.0,
            onshore_mw: e.onshore_gw * 1000.0,
            phi_mw: e.phi_mw,
        };
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

/// Load scenarios from a JSON file.
pub fn load_scenarios(path: &std::path::Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    scenarios_from_json(&text, &path.display().to_string())
}

/// A date-shift: `tau` days of weather re-indexing and `k` positions of
/// day-of-week rotation. `k` is stored wrapped into `-3..=3`; shifting by
/// `k` and `k - 7` is the same alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub tau: i32,
    pub k: i32,
}

impl ShiftSpec {
    pub const IDENTITY: ShiftSpec = ShiftSpec { tau: 0, k: 0 };

    /// Wrap an arbitrary day-of-week offset into the canonical `-3..=3`.
    pub fn wrap_k(k: i32) -> i32 {
        let m = k.rem_euclid(7);
        if m > 3 {
            m - 7
        } else {
            m
        }
    }
}

/// Rotate a day-of-week index (1..=7) by `k`, wrapping cyclically.
pub fn rotate_dow(dow: u8, k: i32) -> u8 {
    ((dow as i32 - 1 + k).rem_euclid(7) + 1) as u8
}

/// One winter's demand under one scenario, in both residual modes, at some
/// shift. Shift state is the only thing the transforms change; the base
/// series, the residuals, and the captured covariates are immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDemand {
    pub scenario_id: String,
    pub winter_id: i32,
    shift: ShiftSpec,
    /// Regression mean under the scenario, unshifted.
    central_base: Vec<f64>,
    /// Historic demand mapped to the scenario, unshifted.
    empirical_base: Vec<f64>,
    /// `empirical_base - central_base`: the fit residuals, by date. Never
    /// touched by shifts.
    residuals: Vec<f64>,
    residual_sd: f64,
    // Covariates captured at map time, used to materialise shifts.
    dow: Vec<u8>,
    omega: [f64; 6],
    lambda_p: f64,
    gamma_p: f64,
    te: PaddedDaily,
    ws: PaddedDaily,
}

impl ScenarioDemand {
    pub fn shift(&self) -> ShiftSpec {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.central_base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.central_base.is_empty()
    }

    /// Sample SD of the fit residuals, the sigma of the stochastic mode.
    pub fn residual_sd(&self) -> f64 {
        self.residual_sd
    }

    /// The fit residuals by date. Identical under every shift.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    fn delta(&self, t: usize) -> f64 {
        let day = t as i64;
        let tau = self.shift.tau as i64;
        // Bounds were checked when the shift was applied.
        let dte = self.te.at(day + tau).unwrap() - self.te.at(day).unwrap();
        let dws = self.ws.at(day + tau).unwrap() - self.ws.at(day).unwrap();
        let m = self.dow[t];
        let domega = omega_of(&self.omega, rotate_dow(m, self.shift.k)) - omega_of(&self.omega, m);
        self.lambda_p * dte + self.gamma_p * dws + domega
    }

    /// The central (regression-mean) series at the current shift.
    pub fn central(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| self.central_base[t] + self.delta(t))
            .collect()
    }

    /// The empirical (residual-attached) series at the current shift.
    pub fn empirical(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| self.empirical_base[t] + self.delta(t))
            .collect()
    }

    /// Largest shift range the weather padding allows: `tau` must lie in
    /// `available().0 ..= available().1`.
    pub fn available(&self) -> (i64, i64) {
        (
            -(self.te.pad_before() as i64),
            self.te.pad_after() as i64,
        )
    }

    fn with_shift(&self, shift: ShiftSpec) -> Result<Self> {
        let (lo, hi) = self.available();
        if (shift.tau as i64) < lo || (shift.tau as i64) > hi {
            return Err(Error::ShiftBounds {
                tau: shift.tau,
                available_lo: lo,
                available_hi: hi,
            });
        }
        let mut out = self.clone();
        out.shift = ShiftSpec {
            tau: shift.tau,
            k: ShiftSpec::wrap_k(shift.k),
        };
        Ok(out)
    }
}

fn omega_of(omega: &[f64; 6], dow: u8) -> f64 {
    if dow == 7 {
        0.0
    } else {
        omega[dow as usize - 1]
    }
}

/// Map a fitted winter into a scenario.
///
/// The empirical series is the historic record with the coefficient
/// differences applied:
///
/// ```text
/// d_emp = observed + (lambda_p - lambda1)*TE + (phi_p - phi_winter)
///                  + (gamma_p - gamma1)*WS
/// ```
///
/// The central series is the scenario regression mean; their difference is
/// the fit residual, date by date. A scenario identical to the fitted
/// coefficients maps the empirical series onto the observed record exactly.
pub fn map_to_scenario(
    fit: &RegressionFit,
    data: &WinterDataset,
    scenario: &Scenario,
) -> Result<ScenarioDemand> {
    scenario.validate()?;
    let phi_p = scenario.phi()?;
    let coeffs = &fit.coefficients;
    let cal = data.calendar();
    let te = data.te_at_peak();
    let ws = data.ws_at_peak();
    let observed = data.observed_peak_demand();
    let phi_hist = coeffs.phi_for(data.winter_id())?;

    let n = cal.len();
    let mut central_base = Vec::with_capacity(n);
    let mut empirical_base = Vec::with_capacity(n);
    for t in 0..n {
        let dsn = cal.dsn()[t] as f64;
        let central = coeffs.alpha
            + scenario.lambda_mw_per_c * te[t]
            + coeffs.beta1 * dsn
            + coeffs.beta2 * (dsn * dsn)
            + scenario.gamma_mw_per_ms * ws[t]
            + coeffs.omega_for(cal.dow()[t])
            + phi_p;
        central_base.push(central);
        let empirical = observed[t]
            + (scenario.lambda_mw_per_c - coeffs.lambda1) * te[t]
            + (phi_p - phi_hist)
            + (scenario.gamma_mw_per_ms - coeffs.gamma1) * ws[t];
        empirical_base.push(empirical);
    }
    let residuals = empirical_base
        .iter()
        .zip(&central_base)
        .map(|(e, c)| e - c)
        .collect();

    Ok(ScenarioDemand {
        scenario_id: scenario.id.clone(),
        winter_id: data.winter_id(),
        shift: ShiftSpec::IDENTITY,
        central_base,
        empirical_base,
        residuals,
        residual_sd: fit.residual_sd,
        dow: cal.dow().to_vec(),
        omega: coeffs.omega,
        lambda_p: scenario.lambda_mw_per_c,
        gamma_p: scenario.gamma_mw_per_ms,
        te: data.te_daily().clone(),
        ws: data.ws_daily().clone(),
    })
}

/// Rotate the day-of-week assignment by `k` positions: each date keeps its
/// weather and residual but takes the weekday effect of the day `k` later
/// in the week (cyclically). Composes with any shift already applied.
pub fn shift_dow(sd: &ScenarioDemand, calendar: &WinterCalendar, k: i32) -> Result<ScenarioDemand> {
    if calendar.winter_id() != sd.winter_id || calendar.dow() != &sd.dow[..] {
        return Err(Error::Contract(format!(
            "calendar for winter {} does not match the series (winter {})",
            calendar.winter_id(),
            sd.winter_id
        )));
    }
    sd.with_shift(ShiftSpec {
        tau: sd.shift.tau,
        k: sd.shift.k + k,
    })
}

/// Shift the weather against the demand record by `tau` days: each date
/// takes the effective temperature and wind of the date `tau` later, while
/// weekday effects and residuals stay put. Returns the demand series and
/// the wind-power series re-indexed the same way. Composes with any shift
/// already applied.
pub fn shift_weather(
    sd: &ScenarioDemand,
    data: &WinterDataset,
    scenario: &Scenario,
    tau: i32,
) -> Result<(ScenarioDemand, WindPowerSeries)> {
    if scenario.id != sd.scenario_id {
        return Err(Error::Contract(format!(
            "scenario {} does not match the series (scenario {})",
            scenario.id, sd.scenario_id
        )));
    }
    if data.winter_id() != sd.winter_id {
        return Err(Error::Contract(format!(
            "dataset winter {} does not match the series (winter {})",
            data.winter_id(),
            sd.winter_id
        )));
    }
    let shifted = sd.with_shift(ShiftSpec {
        tau: sd.shift.tau + tau,
        k: sd.shift.k,
    })?;
    let wind = wind_power(data.cf_onshore(), data.cf_offshore(), scenario)?
        .shifted(shifted.shift.tau);
    Ok((shifted, wind))
}

/// Hourly demand series for a (possibly shifted) scenario winter, built by
/// attaching each date's historic intra-day profile to its shifted peak.
/// This is the hourly series the LOLH computation integrates, exported in
/// the ingest CSV format for inspection.
pub fn to_hourly_demand(
    sd: &ScenarioDemand,
    data: &WinterDataset,
    mode: ResidualMode,
) -> Result<crate::ingest::HourlySeries> {
    let hourly = data.hourly_demand().ok_or(Error::Validation {
        what: "dataset",
        detail: "hourly demand is required to build an hourly profile".into(),
    })?;
    if data.winter_id() != sd.winter_id {
        return Err(Error::Contract(format!(
            "dataset winter {} does not match the series (winter {})",
            data.winter_id(),
            sd.winter_id
        )));
    }
    let peaks = match mode {
        ResidualMode::Empirical => sd.empirical(),
        ResidualMode::Stochastic => sd.central(),
    };
    let observed_peaks = data.observed_peak_demand();
    let mut values = Vec::with_capacity(sd.len() * 24);
    for t in 0..sd.len() {
        for h in 0..24 {
            let offset = hourly.values()[t * 24 + h] - observed_peaks[t];
            values.push(peaks[t] + offset);
        }
    }
    crate::ingest::HourlySeries::new(hourly.start(), values)
}

/// Which demand series a risk computation consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    /// Historic residuals attached to their dates; exact capacity model.
    Empirical,
    /// Central estimate plus a Gaussian residual smeared into the capacity
    /// model.
    Stochastic,
}

impl ResidualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResidualMode::Empirical => "empirical",
            ResidualMode::Stochastic => "stochastic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(ResidualMode::Empirical),
            "stochastic" => Ok(ResidualMode::Stochastic),
            other => Err(Error::Validation {
                what: "mode",
                detail: format!("unknown mode {other:?}, expected empirical or stochastic"),
            }),
        }
    }
}
