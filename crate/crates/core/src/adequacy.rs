//! Capacity outage convolution and loss-of-load risk.
//!
//! The generation fleet (two-state units, independent outages) is convolved
//! onto an integer-MW lattice. Daily risk is `LOLP_t = P(X < d_t - w_t)`
//! with available capacity `X`, peak demand `d_t` and wind generation `w_t`;
//! `LOLE = sum_t LOLP_t` over a winter, and LOLH is the same sum taken over
//! hours. In stochastic residual mode the capacity distribution is smeared
//! with a Gaussian kernel of the regression's residual sd before any LOLP is
//! read, which also makes LOLE continuous in the scenario's year effect so
//! it can be calibrated to a risk standard by bisection.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::demand::RegressionFit;
use crate::error::{Error, Result};
use crate::ingest::WinterDataset;
use crate::scenario::{
    map_to_scenario, shift_dow, shift_weather, ResidualMode, Scenario, ScenarioDemand, ShiftSpec,
};
use crate::weather::{wind_power, WindPowerSeries};

/// One two-state generating unit.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingUnit {
    pub unit_id: String,
    pub capacity_mw: f64,
    /// Probability the unit is available, in `[0, 1]`.
    pub availability: f64,
}

/// Distribution of total available capacity on a regular lattice.
///
/// `pmf[j]` is the probability mass at `origin_mw + j * grid_step` MW. For
/// an exact (unsmeared) fleet distribution `sigma` is `None`; after
/// [`smear_gaussian`] it records the kernel width.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityDistribution {
    grid_step: u32,
    origin_mw: i64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    sigma: Option<f64>,
}

impl CapacityDistribution {
    pub fn grid_step(&self) -> u32 {
        self.grid_step
    }

    pub fn origin_mw(&self) -> i64 {
        self.origin_mw
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Smearing kernel width, if the distribution has been smeared.
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Capacity value of lattice point `j`.
    pub fn level_mw(&self, j: usize) -> f64 {
        (self.origin_mw + j as i64 * self.grid_step as i64) as f64
    }

    pub fn max_capacity_mw(&self) -> f64 {
        self.level_mw(self.pmf.len() - 1)
    }

    pub fn mean_mw(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(j, p)| p * self.level_mw(j))
            .sum()
    }

    fn with_pmf(grid_step: u32, origin_mw: i64, pmf: Vec<f64>, sigma: Option<f64>) -> Self {
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        Self {
            grid_step,
            origin_mw,
            pmf,
            cdf,
            sigma,
        }
    }
}

/// Convolve a fleet of independent two-state units onto a lattice of
/// `grid_step_mw` MW. Unit capacities are rounded to the nearest lattice
/// point.
pub fn convolve_fleet(units: &[GeneratingUnit], grid_step_mw: u32) -> Result<CapacityDistribution> {
    if grid_step_mw == 0 {
        return Err(Error::Validation {
            what: "fleet",
            detail: "grid step must be at least 1 MW".into(),
        });
    }
    if units.is_empty() {
        return Err(Error::Validation {
            what: "fleet",
            detail: "fleet has no units".into(),
        });
    }
    let step = grid_step_mw as f64;
    let mut pmf = vec![1.0];
    for u in units {
        if !(u.capacity_mw.is_finite() && u.capacity_mw > 0.0) {
            return Err(Error::Validation {
                what: "fleet",
                detail: format!(
                    "unit {}: capacity_mw = {} (must be finite and > 0)",
                    u.unit_id, u.capacity_mw
                ),
            });
        }
        if !(0.0..=1.0).contains(&u.availability) {
            return Err(Error::Validation {
                what: "fleet",
                detail: format!(
                    "unit {}: availability_prob = {} (must lie in [0, 1])",
                    u.unit_id, u.availability
                ),
            });
        }
        let cells = (u.capacity_mw / step).round() as usize;
        if cells == 0 {
            return Err(Error::Validation {
                what: "fleet",
                detail: format!(
                    "unit {}: capacity {} MW rounds to zero on a {} MW grid",
                    u.unit_id, u.capacity_mw, grid_step_mw
                ),
            });
        }
        let a = u.availability;
        let mut next = vec![0.0; pmf.len() + cells];
        for (j, p) in pmf.iter().enumerate() {
            next[j] += p * (1.0 - a);
            next[j + cells] += p * a;
        }
        pmf = next;
    }
    Ok(CapacityDistribution::with_pmf(grid_step_mw, 0, pmf, None))
}

/// Smear an exact capacity distribution with a centred Gaussian kernel of
/// width `sigma_mw`, extending the support by six sigma on each side. Each
/// kernel weight is the Gaussian mass falling in the grid cell around its
/// lattice point, renormalised after the six-sigma truncation, so partial
/// sums of the smeared pmf reproduce the smeared CDF exactly at cell
/// boundaries. Smearing twice is an error; `sigma_mw = 0` marks the
/// distribution as smeared without changing it.
pub fn smear_gaussian(dist: &CapacityDistribution, sigma_mw: f64) -> Result<CapacityDistribution> {
    if let Some(s) = dist.sigma {
        return Err(Error::Contract(format!(
            "capacity distribution is already smeared (sigma = {s} MW)"
        )));
    }
    if !(sigma_mw.is_finite() && sigma_mw >= 0.0) {
        return Err(Error::Validation {
            what: "smear",
            detail: format!("sigma = {sigma_mw} MW (must be finite and >= 0)"),
        });
    }
    if sigma_mw == 0.0 {
        let mut out = dist.clone();
        out.sigma = Some(0.0);
        return Ok(out);
    }
    use statrs::distribution::ContinuousCDF;
    let step = dist.grid_step as f64;
    let half = (6.0 * sigma_mw / step).ceil() as usize;
    let n01 = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let mut kernel = vec![0.0; 2 * half + 1];
    for j in 0..=half {
        // Mass in the cell |z| in [(j - 1/2), (j + 1/2)] grid steps,
        // evaluated as a left-tail difference so far cells stay accurate,
        // and mirrored so the kernel is symmetric bit for bit.
        let outer = (j as f64 + 0.5) * step / sigma_mw;
        let inner = (j as f64 - 0.5) * step / sigma_mw;
        let w = n01.cdf(-inner) - n01.cdf(-outer);
        kernel[half + j] = w;
        kernel[half - j] = w;
    }
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }
    let mut pmf = vec![0.0; dist.pmf.len() + 2 * half];
    for (i, &p) in dist.pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (k, &w) in kernel.iter().enumerate() {
            pmf[i + k] += p * w;
        }
    }
    let origin = dist.origin_mw - (half as i64) * dist.grid_step as i64;
    Ok(CapacityDistribution::with_pmf(
        dist.grid_step,
        origin,
        pmf,
        Some(sigma_mw),
    ))
}

/// `P(X < net_demand_mw)`.
///
/// Exact distributions count lattice mass strictly below the net demand.
/// Smeared distributions are read through a continuous, monotone CDF: the
/// mass at each lattice point is spread over the half-open cell around it
/// with a linear density whose slope is reconstructed from the two
/// neighbouring cells, so cell-boundary reads are exact partial sums and
/// interior reads are third-order accurate in the grid step.
pub fn lolp(dist: &CapacityDistribution, net_demand_mw: f64) -> f64 {
    assert!(
        net_demand_mw.is_finite(),
        "net demand must be finite, got {net_demand_mw}"
    );
    let step = dist.grid_step as f64;
    let origin = dist.origin_mw as f64;
    match dist.sigma {
        None | Some(0.0) => {
            // Index of the highest lattice point strictly below net demand.
            let pos = (net_demand_mw - origin) / step;
            let j = pos.ceil() as i64 - 1;
            if j < 0 {
                0.0
            } else if j as usize >= dist.cdf.len() {
                1.0
            } else {
                dist.cdf[j as usize]
            }
        }
        Some(_) => {
            // Cell j covers [level(j) - step/2, level(j) + step/2).
            let pos = (net_demand_mw - origin) / step + 0.5;
            if pos <= 0.0 {
                return 0.0;
            }
            let j = pos.floor() as usize;
            if j >= dist.pmf.len() {
                return 1.0;
            }
            let frac = pos - j as f64;
            let below = if j == 0 { 0.0 } else { dist.cdf[j - 1] };
            let q = dist.pmf[j];
            let left = if j == 0 { 0.0 } else { dist.pmf[j - 1] };
            let right = dist.pmf.get(j + 1).copied().unwrap_or(0.0);
            // In-cell increment from the linear density; the clamp keeps the
            // quadratic inside [0, q], which also keeps it monotone.
            let slope = 0.5 * (right - left);
            let inc = (q * frac - 0.5 * slope * frac * (1.0 - frac)).clamp(0.0, q);
            below + inc
        }
    }
}

fn check_mode(
    dist: &CapacityDistribution,
    sd: &ScenarioDemand,
    mode: ResidualMode,
) -> Result<()> {
    match (mode, dist.sigma) {
        (ResidualMode::Empirical, None) => Ok(()),
        (ResidualMode::Empirical, Some(s)) => Err(Error::ModeMismatch {
            detail: format!(
                "empirical mode needs an exact capacity distribution, got one smeared with sigma = {s} MW"
            ),
        }),
        (ResidualMode::Stochastic, None) => Err(Error::ModeMismatch {
            detail: "stochastic mode needs a capacity distribution smeared with the fit's residual sd"
                .into(),
        }),
        (ResidualMode::Stochastic, Some(s)) => {
            let want = sd.residual_sd();
            if (s - want).abs() <= 1e-9 * want.abs().max(1.0) {
                Ok(())
            } else {
                Err(Error::ModeMismatch {
                    detail: format!(
                        "distribution smeared with sigma = {s} MW but the fit residual sd is {want} MW"
                    ),
                })
            }
        }
    }
}

fn check_wind(sd: &ScenarioDemand, wind: &WindPowerSeries) -> Result<()> {
    if wind.scenario_id != sd.scenario_id {
        return Err(Error::Contract(format!(
            "wind series belongs to scenario {} but demand is scenario {}",
            wind.scenario_id, sd.scenario_id
        )));
    }
    if wind.tau_days() != sd.shift().tau {
        return Err(Error::Contract(format!(
            "wind series is shifted by {} days but demand by {}",
            wind.tau_days(),
            sd.shift().tau
        )));
    }
    Ok(())
}

/// One winter's risk under one scenario at one shift.
#[derive(Debug, Clone, Serialize)]
pub struct RiskResult {
    pub scenario_id: String,
    pub winter_id: i32,
    pub shift: ShiftSpec,
    pub mode: ResidualMode,
    /// Expected days of shortfall over the winter.
    pub lole: f64,
    /// Expected hours of shortfall over the winter, when an hourly profile
    /// was available.
    pub lolh: Option<f64>,
    pub per_day_lolp: Vec<f64>,
}

/// Daily loss-of-load expectation for one mapped winter.
pub fn lole(
    dist: &CapacityDistribution,
    sd: &ScenarioDemand,
    wind: &WindPowerSeries,
    mode: ResidualMode,
) -> Result<RiskResult> {
    check_mode(dist, sd, mode)?;
    check_wind(sd, wind)?;
    let demand = match mode {
        ResidualMode::Empirical => sd.empirical(),
        ResidualMode::Stochastic => sd.central(),
    };
    let mut per_day = Vec::with_capacity(demand.len());
    let mut total = 0.0;
    for (t, d) in demand.iter().enumerate() {
        let w = wind.at_peak(sd.winter_id, t as i64)?;
        let p = lolp(dist, d - w);
        per_day.push(p);
        total += p;
    }
    Ok(RiskResult {
        scenario_id: sd.scenario_id.clone(),
        winter_id: sd.winter_id,
        shift: sd.shift(),
        mode,
        lole: total,
        lolh: None,
        per_day_lolp: per_day,
    })
}

/// Daily and hourly loss-of-load expectation for one mapped winter. Each
/// date's historic intra-day profile (offsets from its 18:00 value) rides
/// with the shifted peak; wind is read hour by hour at the same shift.
pub fn lolh(
    dist: &CapacityDistribution,
    sd: &ScenarioDemand,
    data: &WinterDataset,
    wind: &WindPowerSeries,
    mode: ResidualMode,
) -> Result<RiskResult> {
    check_mode(dist, sd, mode)?;
    check_wind(sd, wind)?;
    if data.winter_id() != sd.winter_id {
        return Err(Error::Contract(format!(
            "dataset winter {} does not match the series (winter {})",
            data.winter_id(),
            sd.winter_id
        )));
    }
    let hourly = data.hourly_demand().ok_or(Error::Validation {
        what: "dataset",
        detail: "hourly risk needs hourly demand; this dataset has daily peaks only".into(),
    })?;
    let observed = data.observed_peak_demand();
    let peaks = match mode {
        ResidualMode::Empirical => sd.empirical(),
        ResidualMode::Stochastic => sd.central(),
    };

    let mut per_day = Vec::with_capacity(peaks.len());
    let mut lole_total = 0.0;
    let mut lolh_total = 0.0;
    for (t, peak) in peaks.iter().enumerate() {
        let wp = wind.at_peak(sd.winter_id, t as i64)?;
        let p = lolp(dist, peak - wp);
        per_day.push(p);
        lole_total += p;
        for h in 0..24 {
            let offset = hourly.values()[t * 24 + h] - observed[t];
            let w = wind.at_hour(sd.winter_id, t as i64, h as u32)?;
            lolh_total += lolp(dist, peak + offset - w);
        }
    }
    Ok(RiskResult {
        scenario_id: sd.scenario_id.clone(),
        winter_id: sd.winter_id,
        shift: sd.shift(),
        mode,
        lole: lole_total,
        lolh: Some(lolh_total),
        per_day_lolp: per_day,
    })
}

/// Which per-winter risk figure a calibration targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskMetric {
    /// Days per winter (LOLE).
    DailyLole,
    /// Hours per winter (LOLH).
    HourlyLolh,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationResult {
    pub scenario_id: String,
    pub metric: RiskMetric,
    pub mode: ResidualMode,
    pub target: f64,
    /// Calibrated year effect, MW.
    pub phi_mw: f64,
    /// Metric value achieved at `phi_mw`, averaged over the winters.
    pub achieved: f64,
    /// Number of metric evaluations spent.
    pub iterations: u32,
}

const CALIBRATION_TOL: f64 = 1e-4;
const PHI_BRACKET_START: f64 = 1000.0;
const PHI_BRACKET_CAP: f64 = 1e9;
const MAX_CALIBRATION_EVALS: u32 = 200;

/// Find the scenario year effect `phi` at which the winters' mean risk
/// metric equals `target`, by bisection on `phi`.
///
/// The metric is increasing in `phi` (more demand, more risk). In
/// stochastic mode the smeared distribution makes it continuous and the
/// result lands within `1e-4` of the target; in empirical mode it is a step
/// function of `phi`, so the bracket may collapse onto a step and the
/// returned `achieved` value is then the closest attainable level.
pub fn calibrate_year_effect(
    fit: &RegressionFit,
    datasets: &[WinterDataset],
    scenario: &Scenario,
    dist: &CapacityDistribution,
    metric: RiskMetric,
    mode: ResidualMode,
    target: f64,
) -> Result<CalibrationResult> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::Validation {
            what: "calibration",
            detail: format!("target = {target} (must be finite and > 0)"),
        });
    }
    if datasets.is_empty() {
        return Err(Error::Validation {
            what: "calibration",
            detail: "no winters supplied".into(),
        });
    }
    let dist_eff = match mode {
        ResidualMode::Empirical => dist.clone(),
        ResidualMode::Stochastic => smear_gaussian(dist, fit.residual_sd)?,
    };
    let evals = std::cell::Cell::new(0u32);
    let eval = |phi: f64| -> Result<f64> {
        evals.set(evals.get() + 1);
        let sc = scenario.with_phi(phi);
        let mut total = 0.0;
        for data in datasets {
            let sd = map_to_scenario(fit, data, &sc)?;
            let wind = wind_power(data.cf_onshore(), data.cf_offshore(), &sc)?;
            let r = match metric {
                RiskMetric::DailyLole => lole(&dist_eff, &sd, &wind, mode)?.lole,
                RiskMetric::HourlyLolh => lolh(&dist_eff, &sd, data, &wind, mode)?
                    .lolh
                    .expect("lolh computes an hourly figure"),
            };
            total += r;
        }
        Ok(total / datasets.len() as f64)
    };

    let mut lo = -PHI_BRACKET_START;
    let mut hi = PHI_BRACKET_START;
    let mut f_lo = eval(lo)?;
    let mut f_hi = eval(hi)?;
    while f_lo > target {
        lo *= 2.0;
        if lo < -PHI_BRACKET_CAP {
            return Err(Error::Calibration {
                target,
                achieved_lo: f_lo,
                achieved_hi: f_hi,
            });
        }
        f_lo = eval(lo)?;
    }
    while f_hi < target {
        hi *= 2.0;
        if hi > PHI_BRACKET_CAP {
            return Err(Error::Calibration {
                target,
                achieved_lo: f_lo,
                achieved_hi: f_hi,
            });
        }
        f_hi = eval(hi)?;
    }

    let done = |phi: f64, achieved: f64, evals: u32| CalibrationResult {
        scenario_id: scenario.id.clone(),
        metric,
        mode,
        target,
        phi_mw: phi,
        achieved,
        iterations: evals,
    };
    if (f_lo - target).abs() <= CALIBRATION_TOL {
        return Ok(done(lo, f_lo, evals.get()));
    }
    if (f_hi - target).abs() <= CALIBRATION_TOL {
        return Ok(done(hi, f_hi, evals.get()));
    }
    loop {
        if evals.get() >= MAX_CALIBRATION_EVALS {
            return Err(Error::Calibration {
                target,
                achieved_lo: f_lo,
                achieved_hi: f_hi,
            });
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if (f_mid - target).abs() <= CALIBRATION_TOL {
            return Ok(done(mid, f_mid, evals.get()));
        }
        if hi - lo <= 1e-9 * lo.abs().max(hi.abs()).max(1.0) {
            // The metric steps over the target inside a vanishing bracket;
            // report the nearest attainable level.
            return Ok(done(mid, f_mid, evals.get()));
        }
        if f_mid < target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
}

/// Which family of shifts a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Day-of-week rotations `k = -3..=3`.
    DayOfWeek,
    /// Weather shifts `tau_lo..=tau_hi` days.
    Weather { tau_lo: i32, tau_hi: i32 },
}

/// Evaluate every (winter, shift) cell of a sweep. Results come back in
/// canonical order: winters ascending as supplied, shifts ascending within
/// each winter. Cells are independent, so they may be computed on a thread
/// pool; the output order and every floating-point sum within a cell are
/// fixed regardless of thread count.
pub fn shift_sweep(
    fit: &RegressionFit,
    datasets: &[WinterDataset],
    scenario: &Scenario,
    dist: &CapacityDistribution,
    kind: SweepKind,
    mode: ResidualMode,
    with_lolh: bool,
) -> Result<Vec<RiskResult>> {
    if datasets.is_empty() {
        return Err(Error::Validation {
            what: "sweep",
            detail: "no winters supplied".into(),
        });
    }
    if let SweepKind::Weather { tau_lo, tau_hi } = kind {
        if tau_lo > tau_hi {
            return Err(Error::Validation {
                what: "sweep",
                detail: format!("tau range {tau_lo}..{tau_hi} is empty"),
            });
        }
    }
    let dist_eff = match mode {
        ResidualMode::Empirical => dist.clone(),
        ResidualMode::Stochastic => smear_gaussian(dist, fit.residual_sd)?,
    };
    let bases: Vec<ScenarioDemand> = datasets
        .iter()
        .map(|d| map_to_scenario(fit, d, scenario))
        .collect::<Result<_>>()?;

    let mut cells: Vec<(usize, i32)> = Vec::new();
    for wi in 0..datasets.len() {
        match kind {
            SweepKind::DayOfWeek => cells.extend((-3..=3).map(|k| (wi, k))),
            SweepKind::Weather { tau_lo, tau_hi } => {
                cells.extend((tau_lo..=tau_hi).map(|tau| (wi, tau)))
            }
        }
    }

    cells
        .par_iter()
        .map(|&(wi, step)| {
            let data = &datasets[wi];
            let (sd, wind) = match kind {
                SweepKind::DayOfWeek => {
                    let sd = shift_dow(&bases[wi], data.calendar(), step)?;
                    let wind = wind_power(data.cf_onshore(), data.cf_offshore(), scenario)?;
                    (sd, wind)
                }
                SweepKind::Weather { .. } => shift_weather(&bases[wi], data, scenario, step)?,
            };
            if with_lolh {
                lolh(&dist_eff, &sd, data, &wind, mode)
            } else {
                lole(&dist_eff, &sd, &wind, mode)
            }
        })
        .collect()
}

/// Shift windows used for stability reporting: +/-3, (-7, +6), +/-10,
/// (-14, +13) and (-21, +20) days.
pub const STANDARD_WINDOWS: [(i32, i32); 5] = [(-3, 3), (-7, 6), (-10, 10), (-14, 13), (-21, 20)];

/// Mean risk over a window of weather shifts.
#[derive(Debug, Clone, Serialize)]
pub struct WindowRow {
    pub scenario_id: String,
    /// `None` is the all-winter row: the mean of the per-winter means.
    pub winter_id: Option<i32>,
    pub window: (i32, i32),
    pub mean_lole: f64,
    pub mean_lolh: Option<f64>,
}

/// Average a weather sweep's results over shift windows. Every `tau` in
/// each window must be present exactly once per winter. Emits one row per
/// (window, winter) plus an all-winter row per window.
pub fn window_average(results: &[RiskResult], windows: &[(i32, i32)]) -> Result<Vec<WindowRow>> {
    if results.is_empty() {
        return Err(Error::Validation {
            what: "window",
            detail: "no sweep results supplied".into(),
        });
    }
    let scenario_id = results[0].scenario_id.clone();
    let mut winters: Vec<i32> = results.iter().map(|r| r.winter_id).collect();
    winters.dedup();
    let mut sorted = winters.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != winters.len() {
        return Err(Error::Validation {
            what: "window",
            detail: "sweep results are not grouped by winter".into(),
        });
    }

    let mut rows = Vec::new();
    for &(a, b) in windows {
        if a > b {
            return Err(Error::Validation {
                what: "window",
                detail: format!("window {a}..{b} is empty"),
            });
        }
        let mut winter_lole = Vec::with_capacity(winters.len());
        let mut winter_lolh: Vec<Option<f64>> = Vec::with_capacity(winters.len());
        for &w in &winters {
            let mut lole_sum = 0.0;
            let mut lolh_sum = Some(0.0);
            let mut count = 0usize;
            for tau in a..=b {
                let cell = results
                    .iter()
                    .find(|r| r.winter_id == w && r.shift.tau == tau && r.shift.k == 0)
                    .ok_or(Error::Validation {
                        what: "window",
                        detail: format!(
                            "window {a}..{b} needs tau = {tau} for winter {w}, which the sweep does not cover"
                        ),
                    })?;
                lole_sum += cell.lole;
                lolh_sum = match (lolh_sum, cell.lolh) {
                    (Some(acc), Some(v)) => Some(acc + v),
                    _ => None,
                };
                count += 1;
            }
            let n = count as f64;
            let mean_lole = lole_sum / n;
            let mean_lolh = lolh_sum.map(|s| s / n);
            winter_lole.push(mean_lole);
            winter_lolh.push(mean_lolh);
            rows.push(WindowRow {
                scenario_id: scenario_id.clone(),
                winter_id: Some(w),
                window: (a, b),
                mean_lole,
                mean_lolh,
            });
        }
        let n = winter_lole.len() as f64;
        let all_lole = winter_lole.iter().sum::<f64>() / n;
        let all_lolh = winter_lolh
            .iter()
            .try_fold(0.0, |acc, v| v.map(|v| acc + v))
            .map(|s| s / n);
        rows.push(WindowRow {
            scenario_id: scenario_id.clone(),
            winter_id: None,
            window: (a, b),
            mean_lole: all_lole,
            mean_lolh: all_lolh,
        });
    }
    Ok(rows)
}

const FLEET_HEADER: [&str; 3] = ["unit_id", "capacity_mw", "availability_prob"];

/// Read a fleet CSV (`unit_id,capacity_mw,availability_prob`).
pub fn load_fleet(path: &Path) -> Result<Vec<GeneratingUnit>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Json {
            path: path_str.clone(),
            detail: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != FLEET_HEADER {
        return Err(Error::Validation {
            what: "fleet",
            detail: format!(
                "{path_str}: expected header {}, got {}",
                FLEET_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut units = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Validation {
            what: "fleet",
            detail: format!("{path_str} row {row}: {e}"),
        })?;
        if record.len() != 3 {
            return Err(Error::Validation {
                what: "fleet",
                detail: format!("{path_str} row {row}: expected 3 fields, got {}", record.len()),
            });
        }
        let unit_id = record[0].to_string();
        if !seen.insert(unit_id.clone()) {
            return Err(Error::Validation {
                what: "fleet",
                detail: format!("{path_str} row {row}: duplicate unit_id {unit_id}"),
            });
        }
        let capacity_mw: f64 = record[1].parse().map_err(|_| Error::Parse {
            path: path_str.clone(),
            row,
            column: "capacity_mw".into(),
            value: record[1].to_string(),
            expected: "a number",
        })?;
        let availability: f64 = record[2].parse().map_err(|_| Error::Parse {
            path: path_str.clone(),
            row,
            column: "availability_prob".into(),
            value: record[2].to_string(),
            expected: "a probability",
        })?;
        units.push(GeneratingUnit {
            unit_id,
            capacity_mw,
            availability,
        });
    }
    if units.is_empty() {
        return Err(Error::Validation {
            what: "fleet",
            detail: format!("{path_str}: fleet has no units"),
        });
    }
    Ok(units)
}

/// Write a fleet CSV in the format [`load_fleet`] reads.
pub fn write_fleet_csv(units: &[GeneratingUnit], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&FLEET_HEADER.join(","));
    out.push('\n');
    for u in units {
        out.push_str(&format!("{},{},{}\n", u.unit_id, u.capacity_mw, u.availability));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write sweep results as CSV (`scenario,winter,tau,k,mode,lole,lolh`).
pub fn write_results_csv(results: &[RiskResult], path: &Path) -> Result<()> {
    let mut out = String::from("scenario,winter,tau,k,mode,lole,lolh\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario_id,
            r.winter_id,
            r.shift.tau,
            r.shift.k,
            r.mode.as_str(),
            r.lole,
            fmt_opt(r.lolh)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write sweep results as JSON, including the per-day LOLP traces.
pub fn write_results_json(results: &[RiskResult], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(results).map_err(|e| Error::Json {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write window averages as CSV
/// (`scenario,winter,window_lo,window_hi,mean_lole,mean_lolh`); the
/// all-winter row carries `winter = all`.
pub fn write_windows_csv(rows: &[WindowRow], path: &Path) -> Result<()> {
    let mut out = String::from("scenario,winter,window_lo,window_hi,mean_lole,mean_lolh\n");
    for r in rows {
        let winter = r
            .winter_id
            .map(|w| w.to_string())
            .unwrap_or_else(|| "all".into());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scenario_id,
            winter,
            r.window.0,
            r.window.1,
            r.mean_lole,
            fmt_opt(r.mean_lolh)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
