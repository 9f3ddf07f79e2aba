//! Weather transforms: effective temperature and wind power.
//!
//! Effective temperature `TE` smooths the ambient temperature `TA` to model
//! the thermal inertia of the building stock. With `TO_h` the mean of the
//! four hours up to and including `h`:
//!
//! ```text
//! TE_h = TO_h                        for h < 24
//! TE_h = (TE_{h-24} + TO_h) / 2      for h >= 24
//! ```
//!
//! The first day's initialisation (`TE_h = TO_h`) is a warm-up: its memory
//! decays by half per day, so series that begin well before the winter
//! window (the recommended 1 October start gives a month of lead-in) carry
//! no visible transient into the window.

use crate::error::{Error, Result};
use crate::ingest::{HourlySeries, PEAK_HOUR};
use crate::scenario::Scenario;

/// Hourly effective temperature plus the daily value sampled at 18:00.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTempSeries {
    pub hourly_te: HourlySeries,
    /// One value per whole day of the span, sampled at [`PEAK_HOUR`].
    pub daily_te_at_peak: Vec<f64>,
}

/// Mean of the last four hours (fewer at the very start of the series).
fn trailing_four_hour_mean(ta: &[f64], h: usize) -> f64 {
    let lo = h.saturating_sub(3);
    let window = &ta[lo..=h];
    window.iter().sum::<f64>() / window.len() as f64
}

/// Compute effective temperature from hourly ambient temperature.
///
/// Requires at least 48 hours so the recursion has one full day of history
/// past its initialisation. The input should span whole days; daily values
/// are produced for every complete day.
pub fn effective_temperature(hourly_temp: &HourlySeries) -> Result<EffectiveTempSeries> {
    let ta = hourly_temp.values();
    if ta.len() < 48 {
        return Err(Error::Validation {
            what: "temperature series",
            detail: format!("{} hours supplied; at least 48 required", ta.len()),
        });
    }
    let mut te = Vec::with_capacity(ta.len());
    for h in 0..ta.len() {
        let to = trailing_four_hour_mean(ta, h);
        if h < 24 {
            te.push(to);
        } else {
            te.push(0.5 * (te[h - 24] + to));
        }
    }
    let daily = (0..ta.len() / 24)
        .map(|d| te[d * 24 + PEAK_HOUR as usize])
        .collect();
    Ok(EffectiveTempSeries {
        hourly_te: HourlySeries::new(hourly_temp.start(), te)?,
        daily_te_at_peak: daily,
    })
}

/// Hourly wind generation for one scenario's installed capacity.
///
/// Values are `cf_onshore * onshore_mw + cf_offshore * offshore_mw` and are
/// aligned with the capacity-factor series they were built from. `tau_days`
/// records a date re-indexing applied by a weather shift: a consumer asking
/// for day `t` reads the value of day `t + tau_days`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindPowerSeries {
    pub scenario_id: String,
    series: HourlySeries,
    tau_days: i32,
}

impl WindPowerSeries {
    pub fn series(&self) -> &HourlySeries {
        &self.series
    }

    pub fn tau_days(&self) -> i32 {
        self.tau_days
    }

    /// Re-indexed copy: day `t` of the result reads day `t + tau` of self.
    pub fn shifted(&self, tau: i32) -> Self {
        Self {
            scenario_id: self.scenario_id.clone(),
            series: self.series.clone(),
            tau_days: self.tau_days + tau,
        }
    }

    /// Wind power at hour `hour` of winter-window day `day`, where day 0 is
    /// the first day of the winter starting in `winter_id`. Applies the
    /// series' `tau_days` re-indexing.
    pub fn at_hour(&self, winter_id: i32, day: i64, hour: u32) -> Result<f64> {
        let nov1 = crate::ingest::winter_start(winter_id).and_hms_opt(0, 0, 0).unwrap();
        let offset_hours = (nov1 - self.series.start()).num_hours();
        let idx = offset_hours + (day + self.tau_days as i64) * 24 + hour as i64;
        if idx < 0 || idx as usize >= self.series.len() {
            return Err(Error::Contract(format!(
                "wind series does not cover day {day} hour {hour} of winter {winter_id} at tau {}",
                self.tau_days
            )));
        }
        Ok(self.series.values()[idx as usize])
    }

    /// Wind power at the 18:00 peak of winter-window day `day`.
    pub fn at_peak(&self, winter_id: i32, day: i64) -> Result<f64> {
        self.at_hour(winter_id, day, PEAK_HOUR)
    }
}

/// Combine capacity-factor series with a scenario's installed wind capacity.
pub fn wind_power(
    cf_onshore: &HourlySeries,
    cf_offshore: &HourlySeries,
    scenario: &Scenario,
) -> Result<WindPowerSeries> {
    if cf_onshore.start() != cf_offshore.start() || cf_onshore.len() != cf_offshore.len() {
        return Err(Error::Alignment {
            detail: format!(
                "cf_onshore covers {}..{} but cf_offshore covers {}..{}",
                cf_onshore.start(),
                cf_onshore.end_exclusive(),
                cf_offshore.start(),
                cf_offshore.end_exclusive()
            ),
        });
    }
    let values = cf_onshore
        .values()
        .iter()
        .zip(cf_offshore.values())
        .map(|(on, off)| on * scenario.onshore_mw + off * scenario.offshore_mw)
        .collect();
    Ok(WindPowerSeries {
        scenario_id: scenario.id.clone(),
        series: HourlySeries::new(cf_onshore.start(), values)?,
        tau_days: 0,
    })
}
