//! Loading, validation, and generation of winter datasets.
//!
//! A "winter" runs 1 November through 31 March inclusive (identified by the
//! year of its November). Demand files cover the winter window hourly;
//! weather files should extend from 1 October through 30 April so that
//! date-shift experiments up to ±30 days never run off the end of the
//! series. All units are MW, °C, and m/s; timestamps are UTC.

pub mod synth;

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime};

use crate::error::{Error, Result};
use crate::weather;

/// Hour of day (UTC) at which the daily peak is taken.
pub const PEAK_HOUR: u32 = 18;

/// First month of the winter window.
pub const WINTER_START_MONTH: u32 = 11;
/// Last month of the winter window (of the following calendar year).
pub const WINTER_END_MONTH: u32 = 3;

/// First day of the winter window for a given winter id.
pub fn winter_start(winter_id: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(winter_id, WINTER_START_MONTH, 1).expect("valid date")
}

/// Last day (inclusive) of the winter window for a given winter id.
pub fn winter_end(winter_id: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(winter_id + 1, WINTER_END_MONTH, 31).expect("valid date")
}

/// A contiguous hourly series of f64 values starting at a known timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    start: NaiveDateTime,
    values: Vec<f64>,
}

impl HourlySeries {
    /// Build a series; values must be non-empty and finite.
    pub fn new(start: NaiveDateTime, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation {
                what: "hourly series",
                detail: "series is empty".into(),
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation {
                what: "hourly series",
                detail: format!("non-finite value {v} at hour {}", start + Duration::hours(i as i64)),
            });
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    /// Timestamp one hour past the final value.
    pub fn end_exclusive(&self) -> NaiveDateTime {
        self.start + Duration::hours(self.values.len() as i64)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of a timestamp within the series, if covered.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let h = (ts - self.start).num_hours();
        if ts < self.start || (ts - self.start) != Duration::hours(h) {
            return None;
        }
        let idx = h as usize;
        (idx < self.values.len()).then_some(idx)
    }

    /// Sub-series covering `[first, last]` whole days.
    pub fn slice_days(&self, first: NaiveDate, last: NaiveDate) -> Result<Self> {
        let want_start = first.and_hms_opt(0, 0, 0).unwrap();
        let want_end = last.and_hms_opt(23, 0, 0).unwrap();
        let lo = self.index_of(want_start);
        let hi = self.index_of(want_end);
        match (lo, hi) {
            (Some(lo), Some(hi)) if lo <= hi => Ok(Self {
                start: want_start,
                values: self.values[lo..=hi].to_vec(),
            }),
            _ => Err(Error::Alignment {
                detail: format!(
                    "series covers {}..{} but {}..{} was requested",
                    self.start,
                    self.end_exclusive(),
                    want_start,
                    want_end
                ),
            }),
        }
    }
}

/// Daily values over a winter window plus padding days on either side.
///
/// Index 0 of [`PaddedDaily::at`] is the first day of the winter window;
/// negative indices reach into the pre-window padding.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedDaily {
    values: Vec<f64>,
    pad_before: usize,
    n_days: usize,
}

impl PaddedDaily {
    pub fn new(values: Vec<f64>, pad_before: usize, n_days: usize) -> Result<Self> {
        if pad_before + n_days > values.len() {
            return Err(Error::Validation {
                what: "padded daily series",
                detail: format!(
                    "{} values cannot hold {} padding + {} window days",
                    values.len(),
                    pad_before,
                    n_days
                ),
            });
        }
        Ok(Self {
            values,
            pad_before,
            n_days,
        })
    }

    pub fn pad_before(&self) -> usize {
        self.pad_before
    }

    pub fn pad_after(&self) -> usize {
        self.values.len() - self.pad_before - self.n_days
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    /// Value for winter-window day `day` (0-based; negative reaches the
    /// padding before the window).
    pub fn at(&self, day: i64) -> Option<f64> {
        let idx = day + self.pad_before as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            return None;
        }
        Some(self.values[idx as usize])
    }

    /// The winter-window days only.
    pub fn core(&self) -> &[f64] {
        &self.values[self.pad_before..self.pad_before + self.n_days]
    }
}

/// Dates, day-of-week, and days-since-November-1 for one winter window.
///
/// Day-of-week uses 1 = Monday … 7 = Sunday; Sunday is the regression's
/// reference day and carries no coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinterCalendar {
    winter_id: i32,
    dates: Vec<NaiveDate>,
    dow: Vec<u8>,
    dsn: Vec<u32>,
}

impl WinterCalendar {
    pub fn winter_id(&self) -> i32 {
        self.winter_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn dow(&self) -> &[u8] {
        &self.dow
    }

    pub fn dsn(&self) -> &[u32] {
        &self.dsn
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Index of a date within the window.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.dates[0]).num_days();
        (d >= 0 && (d as usize) < self.dates.len()).then_some(d as usize)
    }

    /// Calendar with the true weekdays of the winter's dates.
    pub fn for_winter(winter_id: i32) -> Self {
        let nov1_dow = winter_start(winter_id).weekday().number_from_monday() as u8;
        make_calendar(winter_id, nov1_dow).expect("weekday is always 1..=7")
    }
}

/// Build the calendar for a winter, assigning day-of-week cyclically from
/// the given weekday of 1 November. Passing the true weekday reproduces the
/// real calendar; other values let synthetic fixtures control weekday
/// alignment.
pub fn make_calendar(winter_id: i32, dow_of_nov1: u8) -> Result<WinterCalendar> {
    if !(1..=7).contains(&dow_of_nov1) {
        return Err(Error::Validation {
            what: "day of week",
            detail: format!("dow_of_nov1 = {dow_of_nov1}, expected 1..=7"),
        });
    }
    let start = winter_start(winter_id);
    let end = winter_end(winter_id);
    let n = (end - start).num_days() as usize + 1;
    let mut dates = Vec::with_capacity(n);
    let mut dow = Vec::with_capacity(n);
    let mut dsn = Vec::with_capacity(n);
    for t in 0..n {
        dates.push(start + Duration::days(t as i64));
        dow.push(((dow_of_nov1 as usize - 1 + t) % 7) as u8 + 1);
        dsn.push(t as u32);
    }
    Ok(WinterCalendar {
        winter_id,
        dates,
        dow,
        dsn,
    })
}

/// Aligned data for one winter: the calendar, the underlying hourly series,
/// and the daily values the demand model consumes.
///
/// The weather series (temperature, wind speed, capacity factors) share one
/// whole-day hourly span that must cover the winter window and may extend
/// beyond it on both sides; the extension is what date-shift experiments
/// draw on. Daily weather values are sampled at the 18:00 peak hour.
#[derive(Debug, Clone, PartialEq)]
pub struct WinterDataset {
    calendar: WinterCalendar,
    hourly_temp: HourlySeries,
    hourly_wind_speed: HourlySeries,
    cf_onshore: HourlySeries,
    cf_offshore: HourlySeries,
    hourly_demand: Option<HourlySeries>,
    te_daily: PaddedDaily,
    ws_daily: PaddedDaily,
    observed_peak_demand: Vec<f64>,
}

impl WinterDataset {
    /// Assemble a dataset from hourly series.
    ///
    /// The four weather series must share an identical whole-day span
    /// covering the winter window. `hourly_demand` must cover at least the
    /// winter window and is trimmed to it; the observed daily peak is its
    /// 18:00 value.
    pub fn new(
        calendar: WinterCalendar,
        hourly_temp: HourlySeries,
        hourly_wind_speed: HourlySeries,
        cf_onshore: HourlySeries,
        cf_offshore: HourlySeries,
        hourly_demand: HourlySeries,
    ) -> Result<Self> {
        let demand = hourly_demand.slice_days(
            winter_start(calendar.winter_id),
            winter_end(calendar.winter_id),
        )?;
        Self::assemble(
            calendar,
            hourly_temp,
            hourly_wind_speed,
            cf_onshore,
            cf_offshore,
            Some(demand),
            None,
        )
    }

    /// Assemble a dataset that has daily peak demand but no hourly profile.
    /// Hourly risk (LOLH) is unavailable on such datasets.
    pub fn with_daily_peaks(
        calendar: WinterCalendar,
        hourly_temp: HourlySeries,
        hourly_wind_speed: HourlySeries,
        cf_onshore: HourlySeries,
        cf_offshore: HourlySeries,
        observed_peak_demand: Vec<f64>,
    ) -> Result<Self> {
        Self::assemble(
            calendar,
            hourly_temp,
            hourly_wind_speed,
            cf_onshore,
            cf_offshore,
            None,
            Some(observed_peak_demand),
        )
    }

    fn assemble(
        calendar: WinterCalendar,
        hourly_temp: HourlySeries,
        hourly_wind_speed: HourlySeries,
        cf_onshore: HourlySeries,
        cf_offshore: HourlySeries,
        hourly_demand: Option<HourlySeries>,
        daily_peaks: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n_days = calendar.len();

        for (name, s) in [
            ("wind_ms", &hourly_wind_speed),
            ("cf_onshore", &cf_onshore),
            ("cf_offshore", &cf_offshore),
        ] {
            if s.start != hourly_temp.start || s.len() != hourly_temp.len() {
                return Err(Error::Alignment {
                    detail: format!(
                        "weather series {name} covers {}..{} but temp_c covers {}..{}",
                        s.start,
                        s.end_exclusive(),
                        hourly_temp.start,
                        hourly_temp.end_exclusive()
                    ),
                });
            }
        }
        if hourly_temp.start.time() != NaiveTime::from_hms_opt(0, 0, 0).unwrap()
            || hourly_temp.len() % 24 != 0
        {
            return Err(Error::Alignment {
                detail: format!(
                    "weather series must span whole days starting at midnight, got start {} and {} hours",
                    hourly_temp.start,
                    hourly_temp.len()
                ),
            });
        }
        let span_start = hourly_temp.start.date();
        let span_days = hourly_temp.len() / 24;
        let w_start = winter_start(calendar.winter_id);
        let w_end = winter_end(calendar.winter_id);
        let pad_before = (w_start - span_start).num_days();
        let pad_after =
            (span_start + Duration::days(span_days as i64 - 1) - w_end).num_days();
        if pad_before < 0 || pad_after < 0 {
            return Err(Error::Alignment {
                detail: format!(
                    "weather series covers {}..{} but the winter window is {}..{}",
                    span_start,
                    span_start + Duration::days(span_days as i64 - 1),
                    w_start,
                    w_end
                ),
            });
        }

        for (i, &v) in hourly_wind_speed.values.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::Validation {
                    what: "wind speed",
                    detail: format!(
                        "wind_ms = {v} at {} (must be >= 0)",
                        hourly_wind_speed.start + Duration::hours(i as i64)
                    ),
                });
            }
        }
        for (name, s) in [("cf_onshore", &cf_onshore), ("cf_offshore", &cf_offshore)] {
            for (i, &v) in s.values.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation {
                        what: "capacity factor",
                        detail: format!(
                            "{name} = {v} at {} (must lie in [0, 1])",
                            s.start + Duration::hours(i as i64)
                        ),
                    });
                }
            }
        }

        let te = weather::effective_temperature(&hourly_temp)?;
        let te_daily = PaddedDaily::new(te.daily_te_at_peak.clone(), pad_before as usize, n_days)?;
        let ws_daily = PaddedDaily::new(
            sample_daily_at_peak(&hourly_wind_speed),
            pad_before as usize,
            n_days,
        )?;

        let observed_peak_demand = match (&hourly_demand, daily_peaks) {
            (Some(d), None) => {
                if d.start != w_start.and_hms_opt(0, 0, 0).unwrap() || d.len() != n_days * 24 {
                    return Err(Error::Alignment {
                        detail: format!(
                            "hourly demand covers {}..{} but the winter window is {}..{}",
                            d.start,
                            d.end_exclusive(),
                            w_start,
                            w_end
                        ),
                    });
                }
                (0..n_days)
                    .map(|t| d.values[t * 24 + PEAK_HOUR as usize])
                    .collect()
            }
            (None, Some(p)) => {
                if p.len() != n_days {
                    return Err(Error::Alignment {
                        detail: format!(
                            "{} daily peaks supplied for a {}-day winter window",
                            p.len(),
                            n_days
                        ),
                    });
                }
                p
            }
            _ => unreachable!("constructors supply exactly one demand form"),
        };
        if let Some((t, &v)) = observed_peak_demand
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Validation {
                what: "peak demand",
                detail: format!("demand_mw = {v} on {} (must be finite and > 0)", calendar.dates[t]),
            });
        }

        Ok(Self {
            calendar,
            hourly_temp,
            hourly_wind_speed,
            cf_onshore,
            cf_offshore,
            hourly_demand,
            te_daily,
            ws_daily,
            observed_peak_demand,
        })
    }

    pub fn winter_id(&self) -> i32 {
        self.calendar.winter_id
    }

    pub fn calendar(&self) -> &WinterCalendar {
        &self.calendar
    }

    /// Effective temperature at the 18:00 peak, one value per winter day.
    pub fn te_at_peak(&self) -> &[f64] {
        self.te_daily.core()
    }

    /// Wind speed at the 18:00 peak, one value per winter day.
    pub fn ws_at_peak(&self) -> &[f64] {
        self.ws_daily.core()
    }

    /// Effective temperature including the padding days around the window.
    pub fn te_daily(&self) -> &PaddedDaily {
        &self.te_daily
    }

    /// Wind speed at peak including the padding days around the window.
    pub fn ws_daily(&self) -> &PaddedDaily {
        &self.ws_daily
    }

    pub fn observed_peak_demand(&self) -> &[f64] {
        &self.observed_peak_demand
    }

    pub fn hourly_demand(&self) -> Option<&HourlySeries> {
        self.hourly_demand.as_ref()
    }

    pub fn hourly_temp(&self) -> &HourlySeries {
        &self.hourly_temp
    }

    pub fn hourly_wind_speed(&self) -> &HourlySeries {
        &self.hourly_wind_speed
    }

    pub fn cf_onshore(&self) -> &HourlySeries {
        &self.cf_onshore
    }

    pub fn cf_offshore(&self) -> &HourlySeries {
        &self.cf_offshore
    }
}

fn sample_daily_at_peak(s: &HourlySeries) -> Vec<f64> {
    (0..s.len() / 24)
        .map(|d| s.values[d * 24 + PEAK_HOUR as usize])
        .collect()
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

const DEMAND_HEADER: [&str; 2] = ["timestamp", "demand_mw"];
const WEATHER_HEADER: [&str; 5] = ["timestamp", "temp_c", "wind_ms", "cf_onshore", "cf_offshore"];

fn format_ts(ts: NaiveDateTime) -> String {
    format!("{}Z", ts.format("%Y-%m-%dT%H:%M:%S"))
}

fn parse_ts(raw: &str) -> Option<NaiveDateTime> {
    let naive = raw.strip_suffix('Z').unwrap_or(raw);
    NaiveDateTime::parse_from_str(naive, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(naive, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(naive, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

struct CsvTable {
    path: String,
    /// One timestamp per row, validated contiguous hourly.
    start: NaiveDateTime,
    /// Column-major values, one Vec per non-timestamp column.
    columns: Vec<Vec<f64>>,
}

fn read_hourly_csv(path: &Path, header: &[&str]) -> Result<CsvTable> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(
            &display,
            std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
        ),
        _ => Error::Parse {
            path: display.clone(),
            row: 0,
            column: "header".into(),
            value: e.to_string(),
            expected: "csv",
        },
    })?;
    {
        let got = reader.headers().map_err(|e| Error::Parse {
            path: display.clone(),
            row: 0,
            column: "header".into(),
            value: e.to_string(),
            expected: "csv header",
        })?;
        let got: Vec<&str> = got.iter().collect();
        if got != header {
            return Err(Error::Parse {
                path: display,
                row: 0,
                column: "header".into(),
                value: got.join(","),
                expected: "documented column set",
            });
        }
    }

    let mut start: Option<NaiveDateTime> = None;
    let mut prev: Option<NaiveDateTime> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::Parse {
            path: display.clone(),
            row,
            column: "record".into(),
            value: e.to_string(),
            expected: "csv record",
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: display,
                row,
                column: "record".into(),
                value: format!("{} fields", record.len()),
                expected: "one field per documented column",
            });
        }
        let ts = parse_ts(&record[0]).ok_or_else(|| Error::Parse {
            path: display.clone(),
            row,
            column: header[0].into(),
            value: record[0].to_string(),
            expected: "ISO-8601 timestamp",
        })?;
        match prev {
            None => start = Some(ts),
            Some(p) => {
                let expected = p + Duration::hours(1);
                if ts != expected {
                    if ts > expected {
                        return Err(Error::Gap {
                            path: display,
                            timestamp: format_ts(expected),
                        });
                    }
                    return Err(Error::Validation {
                        what: "hourly series",
                        detail: format!(
                            "{display}: timestamp {} at row {row} does not advance by one hour",
                            format_ts(ts)
                        ),
                    });
                }
            }
        }
        prev = Some(ts);
        for (c, col) in columns.iter_mut().enumerate() {
            let raw = &record[c + 1];
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                path: display.clone(),
                row,
                column: header[c + 1].into(),
                value: raw.to_string(),
                expected: "number",
            })?;
            col.push(v);
        }
    }
    let start = start.ok_or_else(|| Error::Validation {
        what: "hourly series",
        detail: format!("{display}: file has no data rows"),
    })?;
    Ok(CsvTable {
        path: display,
        start,
        columns,
    })
}

/// Load one winter from a demand CSV (`timestamp,demand_mw`) and a weather
/// CSV (`timestamp,temp_c,wind_ms,cf_onshore,cf_offshore`).
///
/// Both must be gap-free hourly series. The demand file must cover the
/// winter window; the weather file must cover at least the winter window
/// plus whatever shift padding later experiments need.
pub fn load_winter(demand_path: &Path, weather_path: &Path, winter_id: i32) -> Result<WinterDataset> {
    let demand = read_hourly_csv(demand_path, &DEMAND_HEADER)?;
    let weather = read_hourly_csv(weather_path, &WEATHER_HEADER)?;

    let calendar = WinterCalendar::for_winter(winter_id);
    let demand_series = HourlySeries::new(demand.start, demand.columns.into_iter().next().unwrap())
        .map_err(|e| rewrap_validation(e, &demand.path))?;
    let mut w = weather.columns.into_iter();
    let temp = HourlySeries::new(weather.start, w.next().unwrap())
        .map_err(|e| rewrap_validation(e, &weather.path))?;
    let wind = HourlySeries::new(weather.start, w.next().unwrap())
        .map_err(|e| rewrap_validation(e, &weather.path))?;
    let cf_on = HourlySeries::new(weather.start, w.next().unwrap())
        .map_err(|e| rewrap_validation(e, &weather.path))?;
    let cf_off = HourlySeries::new(weather.start, w.next().unwrap())
        .map_err(|e| rewrap_validation(e, &weather.path))?;

    WinterDataset::new(calendar, temp, wind, cf_on, cf_off, demand_series)
}

fn rewrap_validation(e: Error, path: &str) -> Error {
    match e {
        Error::Validation { what, detail } => Error::Validation {
            what,
            detail: format!("{path}: {detail}"),
        },
        other => other,
    }
}

/// Write a dataset back to the two CSV formats accepted by [`load_winter`].
///
/// Floats are written in shortest round-trip form, so a save/load cycle
/// reproduces the dataset exactly.
pub fn save_winter(ds: &WinterDataset, demand_path: &Path, weather_path: &Path) -> Result<()> {
    let demand = ds.hourly_demand.as_ref().ok_or(Error::Validation {
        what: "dataset",
        detail: "dataset has no hourly demand series to export".into(),
    })?;
    write_demand_csv(demand, demand_path)?;

    let mut out = String::new();
    writeln!(out, "{}", WEATHER_HEADER.join(",")).unwrap();
    for i in 0..ds.hourly_temp.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_ts(ds.hourly_temp.start + Duration::hours(i as i64)),
            ds.hourly_temp.values[i],
            ds.hourly_wind_speed.values[i],
            ds.cf_onshore.values[i],
            ds.cf_offshore.values[i],
        )
        .unwrap();
    }
    std::fs::write(weather_path, out).map_err(|e| Error::io(weather_path.display().to_string(), e))
}

/// Write an hourly demand series in the `timestamp,demand_mw` format.
pub fn write_demand_csv(demand: &HourlySeries, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{}", DEMAND_HEADER.join(",")).unwrap();
    for i in 0..demand.len() {
        writeln!(
            out,
            "{},{}",
            format_ts(demand.start + Duration::hours(i as i64)),
            demand.values[i],
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_series(start: NaiveDateTime, hours: usize, v: f64) -> HourlySeries {
        HourlySeries::new(start, vec![v; hours]).unwrap()
    }

    fn oct1(winter: i32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(winter, 10, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    /// Whole-day weather span 1 Oct .. 30 Apr around a winter.
    fn span_hours(winter: i32) -> usize {
        let start = NaiveDate::from_ymd_opt(winter, 10, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(winter + 1, 4, 30).unwrap();
        ((end - start).num_days() as usize + 1) * 24
    }

    fn small_dataset(winter: i32) -> WinterDataset {
        let hours = span_hours(winter);
        let cal = WinterCalendar::for_winter(winter);
        let demand_start = winter_start(winter).and_hms_opt(0, 0, 0).unwrap();
        WinterDataset::new(
            cal.clone(),
            const_series(oct1(winter), hours, 4.0),
            const_series(oct1(winter), hours, 6.0),
            const_series(oct1(winter), hours, 0.3),
            const_series(oct1(winter), hours, 0.4),
            const_series(demand_start, cal.len() * 24, 48_000.0),
        )
        .unwrap()
    }

    #[test]
    fn calendar_2010_has_151_days_and_monday_nov1() {
        let cal = WinterCalendar::for_winter(2010);
        assert_eq!(cal.len(), 151);
        assert_eq!(cal.dow()[0], 1); // 2010-11-01 was a Monday
        assert_eq!(cal.dsn()[0], 0);
        // 1 December is 30 days after 1 November.
        let dec1 = cal.index_of(NaiveDate::from_ymd_opt(2010, 12, 1).unwrap()).unwrap();
        assert_eq!(cal.dsn()[dec1], 30);
        assert_eq!(*cal.dates().last().unwrap(), NaiveDate::from_ymd_opt(2011, 3, 31).unwrap());
    }

    #[test]
    fn calendar_leap_winter_includes_feb_29() {
        let cal = WinterCalendar::for_winter(2011);
        assert_eq!(cal.len(), 152);
        assert!(cal.index_of(NaiveDate::from_ymd_opt(2012, 2, 29).unwrap()).is_some());
    }

    #[test]
    fn make_calendar_dow_wraps_weekly() {
        let cal = make_calendar(2010, 2).unwrap();
        assert_eq!(cal.dow()[0], 2);
        assert_eq!(cal.dow()[6], 1);
        assert_eq!(cal.dow()[7], 2);
    }

    #[test]
    fn make_calendar_rejects_dow_8() {
        let err = make_calendar(2010, 8).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
    }

    #[test]
    fn dataset_daily_fields_share_calendar_length() {
        let ds = small_dataset(2010);
        let n = ds.calendar().len();
        assert_eq!(ds.te_at_peak().len(), n);
        assert_eq!(ds.ws_at_peak().len(), n);
        assert_eq!(ds.observed_peak_demand().len(), n);
        assert_eq!(ds.te_daily().pad_before(), 31);
        assert_eq!(ds.te_daily().pad_after(), 30);
    }

    #[test]
    fn dataset_rejects_capacity_factor_above_one() {
        let winter = 2010;
        let hours = span_hours(winter);
        let cal = WinterCalendar::for_winter(winter);
        let mut cf = vec![0.3; hours];
        cf[100] = 1.3;
        let err = WinterDataset::new(
            cal.clone(),
            const_series(oct1(winter), hours, 4.0),
            const_series(oct1(winter), hours, 6.0),
            HourlySeries::new(oct1(winter), cf).unwrap(),
            const_series(oct1(winter), hours, 0.4),
            const_series(
                winter_start(winter).and_hms_opt(0, 0, 0).unwrap(),
                cal.len() * 24,
                48_000.0,
            ),
        )
        .unwrap_err();
        assert!(err.to_string().contains("1.3"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn dataset_rejects_weather_that_misses_the_window() {
        let winter = 2010;
        // Weather only covers November; window runs to 31 March.
        let hours = 30 * 24;
        let cal = WinterCalendar::for_winter(winter);
        let start = winter_start(winter).and_hms_opt(0, 0, 0).unwrap();
        let err = WinterDataset::new(
            cal.clone(),
            const_series(start, hours, 4.0),
            const_series(start, hours, 6.0),
            const_series(start, hours, 0.3),
            const_series(start, hours, 0.4),
            const_series(start, cal.len() * 24, 48_000.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Alignment { .. }), "{err}");
    }

    #[test]
    fn csv_round_trip_reproduces_dataset_exactly() {
        let ds = small_dataset(2010);
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("demand_2010.csv");
        let w = dir.path().join("weather_2010.csv");
        save_winter(&ds, &d, &w).unwrap();
        let back = load_winter(&d, &w, 2010).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn load_reports_gap_with_missing_timestamp() {
        let ds = small_dataset(2010);
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("demand.csv");
        let w = dir.path().join("weather.csv");
        save_winter(&ds, &d, &w).unwrap();
        // Remove the row for 2010-12-25T13:00.
        let text = std::fs::read_to_string(&w).unwrap();
        let edited: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with("2010-12-25T13:00:00Z"))
            .collect();
        std::fs::write(&w, edited.join("\n")).unwrap();
        let err = load_winter(&d, &w, 2010).unwrap_err();
        match &err {
            Error::Gap { timestamp, .. } => assert_eq!(timestamp, "2010-12-25T13:00:00Z"),
            other => panic!("expected gap error, got {other}"),
        }
    }

    #[test]
    fn load_reports_parse_error_with_row_and_column() {
        let ds = small_dataset(2010);
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("demand.csv");
        let w = dir.path().join("weather.csv");
        save_winter(&ds, &d, &w).unwrap();
        let text = std::fs::read_to_string(&d).unwrap();
        let edited = text.replacen("48000", "not-a-number", 1);
        std::fs::write(&d, edited).unwrap();
        let err = load_winter(&d, &w, 2010).unwrap_err();
        match &err {
            Error::Parse { row, column, value, .. } => {
                assert_eq!(*row, 2);
                assert_eq!(column, "demand_mw");
                assert_eq!(value, "not-a-number");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error_naming_the_path() {
        let err = load_winter(
            Path::new("/nonexistent/demand.csv"),
            Path::new("/nonexistent/weather.csv"),
            2010,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/demand.csv"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn padded_daily_indexes_relative_to_window() {
        let p = PaddedDaily::new((0..10).map(f64::from).collect(), 3, 5).unwrap();
        assert_eq!(p.at(0), Some(3.0));
        assert_eq!(p.at(-3), Some(0.0));
        assert_eq!(p.at(-4), None);
        assert_eq!(p.at(6), Some(9.0));
        assert_eq!(p.at(7), None);
        assert_eq!(p.core(), &[3.0, 4.0, 5.0, 6.0, 7.0]);
    }
}
