//! Synthetic winter generation for experiments and testing.
//!
//! Weather is an AR(1)-driven temperature field with a seasonal trough in
//! mid-winter and a mild diurnal cycle, plus a persistent wind-speed
//! process whose capacity factors follow a logistic curve. Demand is built
//! from a known coefficient set, so a fit on generated data should recover
//! the planted coefficients. Generation is deterministic in the seed, and
//! each winter draws from its own stream, so adding a winter never changes
//! the ones already generated.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::demand::CoefficientSet;
use crate::error::{Error, Result};
use crate::ingest::{winter_start, HourlySeries, WinterCalendar, WinterDataset, PEAK_HOUR};

/// A cold spell: `temp_delta_c` (usually negative) is added to every hour
/// of `length_days` days starting at the given month/day. Recurs in every
/// generated winter unless pinned to one with `winter`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ColdSpell {
    pub start_month: u32,
    pub start_day: u32,
    pub length_days: u32,
    pub temp_delta_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winter: Option<i32>,
}

/// A holiday demand suppression between two month/days (inclusive; the
/// range may wrap the new year). Recurs in every generated winter unless
/// pinned to one with `winter`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HolidayDip {
    pub start_month: u32,
    pub start_day: u32,
    pub end_month: u32,
    pub end_day: u32,
    pub suppression_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winter: Option<i32>,
}

/// Everything the generator needs, serialisable so a run can be reproduced.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthSpec {
    pub first_winter: i32,
    pub n_winters: u32,
    pub rng_seed: u64,
    /// Standard deviation of the demand noise, MW.
    pub residual_sd_mw: f64,
    pub coefficients: CoefficientSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cold_spell: Option<ColdSpell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holiday_dip: Option<HolidayDip>,
}

impl SynthSpec {
    pub fn winter_ids(&self) -> Vec<i32> {
        (0..self.n_winters as i32)
            .map(|i| self.first_winter + i)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_winters == 0 {
            return Err(Error::Validation {
                what: "synth",
                detail: "n_winters must be at least 1".into(),
            });
        }
        if !(self.residual_sd_mw.is_finite() && self.residual_sd_mw >= 0.0) {
            return Err(Error::Validation {
                what: "synth",
                detail: format!("residual_sd_mw = {} (must be finite and >= 0)", self.residual_sd_mw),
            });
        }
        for w in self.winter_ids() {
            self.coefficients.phi_for(w)?;
        }
        if let Some(s) = &self.cold_spell {
            resolve_month_day(2001, s.start_month, s.start_day)?;
            if s.length_days == 0 {
                return Err(Error::Validation {
                    what: "synth",
                    detail: "cold spell length must be at least 1 day".into(),
                });
            }
        }
        if let Some(d) = &self.holiday_dip {
            resolve_month_day(2001, d.start_month, d.start_day)?;
            resolve_month_day(2001, d.end_month, d.end_day)?;
        }
        Ok(())
    }
}

/// Resolve a month/day against a winter: months July onward fall in the
/// winter's starting year, the rest in the following year.
fn resolve_month_day(winter_id: i32, month: u32, day: u32) -> Result<NaiveDate> {
    let year = if month >= 7 { winter_id } else { winter_id + 1 };
    NaiveDate::from_ymd_opt(year, month, day).ok_or(Error::Validation {
        what: "synth",
        detail: format!("invalid month/day {month:02}-{day:02}"),
    })
}

/// Fraction of the daily peak shaved off at each hour; zero at the peak
/// hour so the 18:00 value is the daily peak.
const PROFILE_DIP: [f64; 24] = [
    0.22, 0.24, 0.25, 0.26, 0.26, 0.25, 0.20, 0.12, 0.08, 0.07, 0.07, 0.08, 0.09, 0.10, 0.10,
    0.08, 0.04, 0.01, 0.00, 0.01, 0.04, 0.09, 0.15, 0.19,
];

struct Ar1 {
    rho: f64,
    noise: Normal<f64>,
    state: f64,
}

impl Ar1 {
    fn new(rho: f64, innovation_sd: f64) -> Self {
        Self {
            rho,
            noise: Normal::new(0.0, innovation_sd).expect("finite sd"),
            state: 0.0,
        }
    }

    fn step(&mut self, rng: &mut impl Rng) -> f64 {
        self.state = self.rho * self.state + self.noise.sample(rng);
        self.state
    }
}

/// Generate one winter. Weather spans 1 October through 30 April so the
/// dataset supports date shifts of up to a month in both directions.
pub fn generate_winter(spec: &SynthSpec, winter_id: i32) -> Result<WinterDataset> {
    spec.validate()?;
    if !spec.winter_ids().contains(&winter_id) {
        return Err(Error::Contract(format!(
            "winter {winter_id} is outside the spec's range {}..{}",
            spec.first_winter,
            spec.first_winter + spec.n_winters as i32 - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.rng_seed ^ (winter_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );

    let span_start = NaiveDate::from_ymd_opt(winter_id, 10, 1).unwrap();
    let span_end = NaiveDate::from_ymd_opt(winter_id + 1, 4, 30).unwrap();
    let span_days = (span_end - span_start).num_days() as usize + 1;
    let hours = span_days * 24;
    let start_ts = span_start.and_hms_opt(0, 0, 0).unwrap();

    // Temperature: seasonal trough + diurnal cycle + fast and slow AR(1).
    let mut fast = Ar1::new(0.95, 0.6);
    let mut slow = Ar1::new(0.995, 0.18);
    let mut ta = Vec::with_capacity(hours);
    for h in 0..hours {
        let x = (h / 24) as f64 / (span_days - 1) as f64;
        let seasonal = 10.0 - 9.0 * (std::f64::consts::PI * x).sin();
        let hour_of_day = (h % 24) as f64;
        let diurnal = 2.5 * (2.0 * std::f64::consts::PI * (hour_of_day - 14.0) / 24.0).cos();
        ta.push(seasonal + diurnal + fast.step(&mut rng) + slow.step(&mut rng));
    }
    if let Some(s) = spec
        .cold_spell
        .as_ref()
        .filter(|s| s.winter.is_none() || s.winter == Some(winter_id))
    {
        let first = resolve_month_day(winter_id, s.start_month, s.start_day)?;
        for d in 0..s.length_days as i64 {
            let date = first + Duration::days(d);
            let offset = (date - span_start).num_days();
            if offset < 0 || offset as usize >= span_days {
                continue;
            }
            for h in 0..24 {
                ta[offset as usize * 24 + h] += s.temp_delta_c;
            }
        }
    }

    // Wind speed: persistent AR(1) around a seasonal mean, floored at zero.
    let mut wind_ar = Ar1::new(0.97, 0.55);
    let mut ws = Vec::with_capacity(hours);
    for h in 0..hours {
        let x = (h / 24) as f64 / (span_days - 1) as f64;
        let mean = 5.5 + 1.0 * (std::f64::consts::PI * x).sin();
        ws.push((mean + wind_ar.step(&mut rng)).max(0.0));
    }

    // Capacity factors as logistic functions of wind speed.
    let logistic = |v: f64, mid: f64, width: f64, cap: f64| -> f64 {
        (cap / (1.0 + (-(v - mid) / width).exp())).clamp(0.0, 1.0)
    };
    let cf_on: Vec<f64> = ws.iter().map(|&v| logistic(v, 6.5, 1.6, 0.92)).collect();
    let cf_off: Vec<f64> = ws.iter().map(|&v| logistic(v, 5.8, 1.5, 0.95)).collect();

    let temp = HourlySeries::new(start_ts, ta)?;
    let te = crate::weather::effective_temperature(&temp)?;
    let pad_before = (winter_start(winter_id) - span_start).num_days() as usize;

    let calendar = WinterCalendar::for_winter(winter_id);
    let noise = Normal::new(0.0, spec.residual_sd_mw.max(f64::MIN_POSITIVE)).expect("finite sd");
    let dip = spec
        .holiday_dip
        .as_ref()
        .filter(|d| d.winter.is_none() || d.winter == Some(winter_id));
    let dip_range = match dip {
        Some(d) => Some((
            resolve_month_day(winter_id, d.start_month, d.start_day)?,
            resolve_month_day(winter_id, d.end_month, d.end_day)?,
            d.suppression_mw,
        )),
        None => None,
    };

    let mut demand = Vec::with_capacity(calendar.len() * 24);
    for (t, date) in calendar.dates().iter().enumerate() {
        let day = pad_before + t;
        let te_t = te.daily_te_at_peak[day];
        let ws_t = ws[day * 24 + PEAK_HOUR as usize];
        let dsn = calendar.dsn()[t] as f64;
        let dow = calendar.dow()[t];
        let mut peak = spec
            .coefficients
            .central(te_t, dsn, ws_t, dow, winter_id)?;
        if spec.residual_sd_mw > 0.0 {
            peak += noise.sample(&mut rng);
        }
        if let Some((lo, hi, suppression)) = dip_range {
            if *date >= lo && *date <= hi {
                peak -= suppression;
            }
        }
        for frac in PROFILE_DIP {
            demand.push(peak * (1.0 - frac));
        }
    }
    let demand = HourlySeries::new(winter_start(winter_id).and_hms_opt(0, 0, 0).unwrap(), demand)?;

    WinterDataset::new(
        calendar,
        temp,
        HourlySeries::new(start_ts, ws)?,
        HourlySeries::new(start_ts, cf_on)?,
        HourlySeries::new(start_ts, cf_off)?,
        demand,
    )
}

/// Generate all winters in the spec, in ascending order.
pub fn generate(spec: &SynthSpec) -> Result<Vec<WinterDataset>> {
    spec.winter_ids()
        .into_iter()
        .map(|w| generate_winter(spec, w))
        .collect()
}

/// A plausible coefficient set for generated systems: a mid-40s GW winter
/// peak with year effects shrinking to zero at the last winter.
pub fn default_coefficients(winter_ids: &[i32]) -> CoefficientSet {
    let reference = *winter_ids.iter().max().expect("at least one winter");
    let phi = winter_ids
        .iter()
        .filter(|&&w| w != reference)
        .map(|&w| (w, 450.0 * (reference - w) as f64))
        .collect();
    CoefficientSet {
        alpha: 46_415.16,
        lambda1: -562.47,
        beta1: 39.39,
        beta2: -0.31,
        gamma1: 125.96,
        omega: [-3_301.58, 1_664.20, 1_720.86, 1_576.71, 1_436.08, -3_616.42],
        phi,
        reference_winter: reference,
    }
}

/// Read a [`SynthSpec`] from JSON.
pub fn spec_from_json(text: &str, path: &str) -> Result<SynthSpec> {
    let spec: SynthSpec = serde_json::from_str(text).map_err(|e| Error::Json {
        path: path.into(),
        detail: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Write a [`SynthSpec`] as pretty JSON.
pub fn spec_to_json(spec: &SynthSpec) -> Result<String> {
    serde_json::to_string_pretty(spec).map_err(|e| Error::Json {
        path: "synth spec".into(),
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> SynthSpec {
        SynthSpec {
            first_winter: 2009,
            n_winters: 2,
            rng_seed: 42,
            residual_sd_mw: 300.0,
            coefficients: default_coefficients(&[2009, 2010]),
            cold_spell: None,
            holiday_dip: None,
        }
    }

    fn peak_bits(ds: &WinterDataset) -> Vec<u64> {
        ds.observed_peak_demand().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let spec = base_spec();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(peak_bits(x), peak_bits(y));
            assert_eq!(x.hourly_temp(), y.hourly_temp());
            assert_eq!(x.cf_offshore(), y.cf_offshore());
        }
        let mut other = spec.clone();
        other.rng_seed = 43;
        let c = generate(&other).unwrap();
        assert_ne!(peak_bits(&a[0]), peak_bits(&c[0]));
    }

    #[test]
    fn winters_draw_from_independent_streams() {
        let spec = base_spec();
        let both = generate(&spec).unwrap();
        let mut wider = spec.clone();
        wider.n_winters = 3;
        // Cover the extra winter's year effect without touching the existing
        // ones; the first two winters must come out identical.
        wider.coefficients.phi.insert(2011, -450.0);
        let three = generate(&wider).unwrap();
        assert_eq!(peak_bits(&both[0]), peak_bits(&three[0]));
        assert_eq!(peak_bits(&both[1]), peak_bits(&three[1]));
    }

    #[test]
    fn noiseless_demand_is_exactly_the_regression_mean() {
        let mut spec = base_spec();
        spec.residual_sd_mw = 0.0;
        let ds = generate_winter(&spec, 2009).unwrap();
        let cal = ds.calendar();
        for t in 0..cal.len() {
            let want = spec
                .coefficients
                .central(
                    ds.te_at_peak()[t],
                    cal.dsn()[t] as f64,
                    ds.ws_at_peak()[t],
                    cal.dow()[t],
                    2009,
                )
                .unwrap();
            assert_eq!(ds.observed_peak_demand()[t].to_bits(), want.to_bits());
        }
    }

    #[test]
    fn peak_hour_is_the_daily_maximum() {
        let spec = base_spec();
        let ds = generate_winter(&spec, 2010).unwrap();
        let hourly = ds.hourly_demand().unwrap();
        for t in 0..ds.calendar().len() {
            let peak = ds.observed_peak_demand()[t];
            for h in 0..24 {
                assert!(hourly.values()[t * 24 + h] <= peak);
            }
        }
    }

    #[test]
    fn cold_spell_shifts_temperature_by_exactly_delta() {
        let spec = base_spec();
        let mut with = spec.clone();
        with.cold_spell = Some(ColdSpell {
            start_month: 1,
            start_day: 10,
            length_days: 5,
            temp_delta_c: -6.0,
            winter: None,
        });
        let plain = generate_winter(&spec, 2009).unwrap();
        let spelled = generate_winter(&with, 2009).unwrap();
        let start = NaiveDate::from_ymd_opt(2009, 10, 1).unwrap();
        let spell_from = NaiveDate::from_ymd_opt(2010, 1, 10).unwrap();
        for d in 0..5 {
            let offset = ((spell_from + Duration::days(d)) - start).num_days() as usize;
            for h in 0..24 {
                let a = plain.hourly_temp().values()[offset * 24 + h];
                let b = spelled.hourly_temp().values()[offset * 24 + h];
                assert_eq!((a - 6.0).to_bits(), b.to_bits());
            }
        }
        let before = (spell_from - start).num_days() as usize - 2;
        assert_eq!(
            plain.hourly_temp().values()[before * 24],
            spelled.hourly_temp().values()[before * 24]
        );
    }

    #[test]
    fn pinned_spell_leaves_other_winters_alone() {
        let spec = base_spec();
        let mut with = spec.clone();
        with.cold_spell = Some(ColdSpell {
            start_month: 1,
            start_day: 10,
            length_days: 5,
            temp_delta_c: -6.0,
            winter: Some(2009),
        });
        let plain = generate_winter(&spec, 2010).unwrap();
        let pinned = generate_winter(&with, 2010).unwrap();
        assert_eq!(plain.hourly_temp(), pinned.hourly_temp());
    }

    #[test]
    fn holiday_dip_suppresses_peaks_in_range() {
        let spec = base_spec();
        let mut with = spec.clone();
        with.holiday_dip = Some(HolidayDip {
            start_month: 12,
            start_day: 20,
            end_month: 1,
            end_day: 2,
            suppression_mw: 4_000.0,
            winter: None,
        });
        let plain = generate_winter(&spec, 2009).unwrap();
        let dipped = generate_winter(&with, 2009).unwrap();
        let cal = plain.calendar();
        let lo = NaiveDate::from_ymd_opt(2009, 12, 20).unwrap();
        let hi = NaiveDate::from_ymd_opt(2010, 1, 2).unwrap();
        for (t, date) in cal.dates().iter().enumerate() {
            let a = plain.observed_peak_demand()[t];
            let b = dipped.observed_peak_demand()[t];
            if *date >= lo && *date <= hi {
                assert_eq!((a - 4_000.0).to_bits(), b.to_bits(), "{date}");
            } else {
                assert_eq!(a.to_bits(), b.to_bits(), "{date}");
            }
        }
    }

    #[test]
    fn fit_recovers_planted_coefficients() {
        let mut spec = base_spec();
        spec.n_winters = 3;
        spec.coefficients = default_coefficients(&[2009, 2010, 2011]);
        spec.residual_sd_mw = 250.0;
        let winters = generate(&spec).unwrap();
        let design = crate::demand::build_design_matrix(&winters).unwrap();
        let fit = crate::demand::fit_ols(&design).unwrap();
        let c = &fit.coefficients;
        let p = &spec.coefficients;
        let within = |name: &str, got: f64, want: f64| {
            let se = fit.standard_error(name).unwrap();
            assert!(
                (got - want).abs() <= 4.0 * se,
                "{name}: {got} vs {want} (se {se})"
            );
        };
        within("te", c.lambda1, p.lambda1);
        within("ws", c.gamma1, p.gamma1);
        within("dsn", c.beta1, p.beta1);
        within("dsn2", c.beta2, p.beta2);
        within("intercept", c.alpha, p.alpha);
        for (i, name) in ["dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat"]
            .iter()
            .enumerate()
        {
            within(name, c.omega[i], p.omega[i]);
        }
        assert!(fit.adjusted_r2 > 0.95, "adjusted R2 = {}", fit.adjusted_r2);
        assert!((fit.residual_sd - 250.0).abs() < 40.0);
    }

    #[test]
    fn weather_padding_covers_a_month_each_side() {
        let ds = generate_winter(&base_spec(), 2009).unwrap();
        assert_eq!(ds.te_daily().pad_before(), 31);
        assert_eq!(ds.te_daily().pad_after(), 30);
    }

    #[test]
    fn spec_json_round_trips() {
        let mut spec = base_spec();
        spec.cold_spell = Some(ColdSpell {
            start_month: 12,
            start_day: 24,
            length_days: 5,
            temp_delta_c: -7.5,
            winter: Some(2009),
        });
        spec.holiday_dip = Some(HolidayDip {
            start_month: 12,
            start_day: 20,
            end_month: 1,
            end_day: 2,
            suppression_mw: 3_500.0,
            winter: None,
        });
        let text = spec_to_json(&spec).unwrap();
        let back = spec_from_json(&text, "spec.json").unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = base_spec();
        spec.n_winters = 0;
        assert!(spec.validate().is_err());

        let mut spec = base_spec();
        spec.n_winters = 5; // phi only covers 2009..2010
        assert!(spec.validate().is_err());

        let mut spec = base_spec();
        spec.cold_spell = Some(ColdSpell {
            start_month: 2,
            start_day: 30,
            length_days: 3,
            temp_delta_c: -5.0,
            winter: None,
        });
        assert!(spec.validate().is_err());
    }
}
