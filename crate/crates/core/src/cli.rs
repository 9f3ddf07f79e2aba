//! Command-line entry point: `synth` generates a corpus, `fit` estimates the
//! demand model, `risk` runs calibration, shift sweeps and window averages.
//!
//! Every flag can also be supplied through a JSON config file (`--config`);
//! explicit flags win. Exit codes: 0 success, 2 input error, 3
//! numerical/contract error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::adequacy::{
    calibrate_year_effect, convolve_fleet, load_fleet, shift_sweep, window_average,
    write_results_csv, write_results_json, write_windows_csv, RiskMetric, SweepKind,
    STANDARD_WINDOWS,
};
use crate::demand::{build_design_matrix, fit_from_json, fit_ols, fit_to_json, RegressionFit};
use crate::ingest::synth::{
    default_coefficients, generate, spec_from_json, spec_to_json, ColdSpell, HolidayDip, SynthSpec,
};
use crate::ingest::{load_winter, save_winter, WinterDataset};
use crate::scenario::{load_scenarios, ResidualMode};
use crate::{Error, Result};

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Risk(args) => cmd_risk(args),
    }
}

#[derive(Parser)]
#[command(name = "shiftra", version, about = "Weather-shift resource adequacy pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic demand/weather corpus
    Synth(SynthArgs),
    /// Fit the daily-peak demand model
    Fit(FitArgs),
    /// Compute loss-of-load risk tables
    Risk(RiskArgs),
}

#[derive(Args, Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SynthArgs {
    /// JSON file supplying any of the other flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of winters to generate [default: 3]
    #[arg(long)]
    winters: Option<u32>,
    /// First winter id, the year of that winter's November [default: 2009]
    #[arg(long)]
    first_winter: Option<i32>,
    /// RNG seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Residual standard deviation, MW [default: 750]
    #[arg(long)]
    residual_sd: Option<f64>,
    /// Plant a cold spell, YYYY-MM-DD:LENGTH:DELTA (e.g. 2010-12-06:3:-8)
    #[arg(long, allow_hyphen_values = true)]
    cold_spell: Option<String>,
    /// Plant a holiday demand dip, MM-DD..MM-DD:MW (e.g. 12-20..01-02:4000)
    #[arg(long)]
    holiday_dip: Option<String>,
    /// Full generator spec as JSON; other flags override its fields
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FitArgs {
    /// JSON file supplying any of the other flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Directory containing demand_<winter>.csv files
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Directory containing weather_<winter>.csv files [default: the demand directory]
    #[arg(long)]
    weather: Option<PathBuf>,
    /// Winter range A..B inclusive [default: every winter in the demand directory]
    #[arg(long)]
    winters: Option<String>,
    /// Write the fit as JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RiskArgs {
    /// JSON file supplying any of the other flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Directory containing demand_<winter>.csv files
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Directory containing weather_<winter>.csv files [default: the demand directory]
    #[arg(long)]
    weather: Option<PathBuf>,
    /// Winter range A..B inclusive [default: every winter in the demand directory]
    #[arg(long)]
    winters: Option<String>,
    /// Fit JSON produced by `fit --out`; fits in-process when absent
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Fleet CSV (unit_id,capacity_mw,availability_prob)
    #[arg(long)]
    fleet: Option<PathBuf>,
    /// Scenario JSON file
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Residual treatment: empirical or stochastic [default: empirical]
    #[arg(long)]
    mode: Option<String>,
    /// Sweep kind: dow or weather [default: dow]
    #[arg(long)]
    sweep: Option<String>,
    /// Weather-shift range A..B days [default: -21..20]
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Window table for weather sweeps: `default` or comma-separated A..B ranges
    #[arg(long, allow_hyphen_values = true)]
    windows: Option<String>,
    /// Calibrate each scenario's year effect to this mean LOLE, days/winter
    #[arg(long)]
    target_lole: Option<f64>,
    /// Calibrate each scenario's year effect to this mean LOLH, hours/winter
    #[arg(long)]
    target_lolh: Option<f64>,
    /// Also compute hourly LOLH (needs hourly demand data)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    lolh: Option<bool>,
    /// Capacity grid step, MW [default: 1]
    #[arg(long)]
    grid_step: Option<u32>,
    /// Worker threads for the sweep [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Results CSV path; a .json twin and a _windows.csv table land beside it
    /// [default: results.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(p.display().to_string(), e))?;
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: p.display().to_string(),
                detail: e.to_string(),
            })
        }
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Validation {
        what: "cli",
        detail: format!("--{flag} is required (flag or config file)"),
    })
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let file: SynthArgs = load_config(&args.config)?;
    let spec_path = args.spec.or(file.spec);
    let winters = args.winters.or(file.winters);
    let first_winter = args.first_winter.or(file.first_winter);
    let seed = args.seed.or(file.seed);
    let residual_sd = args.residual_sd.or(file.residual_sd);
    let cold_spell = args.cold_spell.or(file.cold_spell);
    let holiday_dip = args.holiday_dip.or(file.holiday_dip);
    let out_dir = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));

    let mut spec = match &spec_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(p.display().to_string(), e))?;
            spec_from_json(&text, &p.display().to_string())?
        }
        None => {
            let first = first_winter.unwrap_or(2009);
            let n = winters.unwrap_or(3);
            let ids: Vec<i32> = (0..n as i32).map(|i| first + i).collect();
            SynthSpec {
                first_winter: first,
                n_winters: n,
                rng_seed: 1,
                residual_sd_mw: 750.0,
                coefficients: default_coefficients(&ids),
                cold_spell: None,
                holiday_dip: None,
            }
        }
    };
    if spec_path.is_some() {
        if let Some(n) = winters {
            spec.n_winters = n;
        }
        if let Some(f) = first_winter {
            spec.first_winter = f;
        }
    }
    if let Some(s) = seed {
        spec.rng_seed = s;
    }
    if let Some(sd) = residual_sd {
        spec.residual_sd_mw = sd;
    }
    if let Some(text) = &cold_spell {
        spec.cold_spell = Some(parse_cold_spell(text)?);
    }
    if let Some(text) = &holiday_dip {
        spec.holiday_dip = Some(parse_holiday_dip(text)?);
    }
    spec.validate()?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let datasets = generate(&spec)?;
    for ds in &datasets {
        let w = ds.winter_id();
        save_winter(
            ds,
            &out_dir.join(format!("demand_{w}.csv")),
            &out_dir.join(format!("weather_{w}.csv")),
        )?;
    }
    let spec_file = out_dir.join("synth_spec.json");
    std::fs::write(&spec_file, spec_to_json(&spec)?)
        .map_err(|e| Error::io(spec_file.display().to_string(), e))?;
    println!("wrote {} winters to {}", datasets.len(), out_dir.display());
    Ok(())
}

/// `YYYY-MM-DD:LENGTH:DELTA`; the date pins the spell to one winter.
fn parse_cold_spell(text: &str) -> Result<ColdSpell> {
    let bad = |detail: String| Error::Validation { what: "cold spell flag", detail };
    let mut parts = text.splitn(3, ':');
    let date = parts.next().unwrap_or("");
    let len = parts.next().ok_or_else(|| bad(format!("{text}: expected DATE:LENGTH:DELTA")))?;
    let delta = parts.next().ok_or_else(|| bad(format!("{text}: expected DATE:LENGTH:DELTA")))?;
    let date = chrono::NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|e| bad(format!("{date}: {e}")))?;
    use chrono::Datelike;
    let winter = if date.month() >= 7 { date.year() } else { date.year() - 1 };
    Ok(ColdSpell {
        start_month: date.month(),
        start_day: date.day(),
        length_days: len.parse().map_err(|e| bad(format!("length {len}: {e}")))?,
        temp_delta_c: delta.parse().map_err(|e| bad(format!("delta {delta}: {e}")))?,
        winter: Some(winter),
    })
}

/// `MM-DD..MM-DD:MW`; recurs every winter.
fn parse_holiday_dip(text: &str) -> Result<HolidayDip> {
    let bad = |detail: String| Error::Validation { what: "holiday dip flag", detail };
    let (span, mw) = text
        .rsplit_once(':')
        .ok_or_else(|| bad(format!("{text}: expected MM-DD..MM-DD:MW")))?;
    let (start, end) = span
        .split_once("..")
        .ok_or_else(|| bad(format!("{span}: expected MM-DD..MM-DD")))?;
    let month_day = |s: &str| -> Result<(u32, u32)> {
        let (m, d) = s
            .split_once('-')
            .ok_or_else(|| bad(format!("{s}: expected MM-DD")))?;
        Ok((
            m.parse().map_err(|e| bad(format!("month {m}: {e}")))?,
            d.parse().map_err(|e| bad(format!("day {d}: {e}")))?,
        ))
    };
    let (start_month, start_day) = month_day(start)?;
    let (end_month, end_day) = month_day(end)?;
    Ok(HolidayDip {
        start_month,
        start_day,
        end_month,
        end_day,
        suppression_mw: mw.parse().map_err(|e| bad(format!("suppression {mw}: {e}")))?,
        winter: None,
    })
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let file: FitArgs = load_config(&args.config)?;
    let demand = require(args.demand.or(file.demand), "demand")?;
    let weather = args.weather.or(file.weather).unwrap_or_else(|| demand.clone());
    let winters = winter_ids(args.winters.or(file.winters).as_deref(), &demand)?;
    let out = args.out.or(file.out);

    let datasets = load_datasets(&demand, &weather, &winters)?;
    let fit = fit_ols(&build_design_matrix(&datasets)?)?;
    print_fit(&fit);
    if let Some(path) = out {
        let mut text = fit_to_json(&fit);
        if !text.ends_with('\n') {
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        println!("wrote fit to {}", path.display());
    }
    Ok(())
}

fn print_fit(fit: &RegressionFit) {
    let c = &fit.coefficients;
    let dow_names = ["dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat"];
    let mut rows: Vec<(String, f64)> = vec![
        ("intercept".into(), c.alpha),
        ("te".into(), c.lambda1),
        ("dsn".into(), c.beta1),
        ("dsn2".into(), c.beta2),
        ("ws".into(), c.gamma1),
    ];
    for (name, value) in dow_names.iter().zip(c.omega) {
        rows.push((name.to_string(), value));
    }
    for (winter, value) in &c.phi {
        rows.push((format!("year_{winter}"), *value));
    }
    println!("{:<12} {:>14} {:>12}", "column", "estimate", "std_error");
    for (name, value) in rows {
        let se = fit
            .standard_errors
            .get(&name)
            .map(|s| format!("{s:.4}"))
            .unwrap_or_else(|| "-".into());
        println!("{name:<12} {value:>14.4} {se:>12}");
    }
    println!(
        "n_obs {} adjusted_r2 {:.4} residual_sd {:.4} lag1_autocorr {:.4}",
        fit.n_obs, fit.adjusted_r2, fit.residual_sd, fit.lag1_autocorr
    );
}

fn cmd_risk(args: RiskArgs) -> Result<()> {
    let file: RiskArgs = load_config(&args.config)?;
    let demand = require(args.demand.or(file.demand), "demand")?;
    let weather = args.weather.or(file.weather).unwrap_or_else(|| demand.clone());
    let winters = winter_ids(args.winters.or(file.winters).as_deref(), &demand)?;
    let fit_path = args.fit.or(file.fit);
    let fleet_path = require(args.fleet.or(file.fleet), "fleet")?;
    let scenarios_path = require(args.scenarios.or(file.scenarios), "scenarios")?;
    let mode = match args.mode.or(file.mode) {
        Some(text) => ResidualMode::parse(&text)?,
        None => ResidualMode::Empirical,
    };
    let sweep_name = args.sweep.or(file.sweep).unwrap_or_else(|| "dow".into());
    let tau = args.tau.or(file.tau);
    let windows = args.windows.or(file.windows);
    let target_lole = args.target_lole.or(file.target_lole);
    let target_lolh = args.target_lolh.or(file.target_lolh);
    let with_lolh = args.lolh.or(file.lolh).unwrap_or(false) || target_lolh.is_some();
    let grid_step = args.grid_step.or(file.grid_step).unwrap_or(1);
    let threads = args.threads.or(file.threads);
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("results.csv"));

    if target_lole.is_some() && target_lolh.is_some() {
        return Err(Error::Validation {
            what: "cli",
            detail: "--target-lole and --target-lolh are mutually exclusive".into(),
        });
    }
    let kind = match sweep_name.as_str() {
        "dow" => SweepKind::DayOfWeek,
        "weather" => {
            let (lo, hi) = match &tau {
                Some(text) => parse_i32_range(text)?,
                None => (-21, 20),
            };
            SweepKind::Weather { tau_lo: lo, tau_hi: hi }
        }
        other => {
            return Err(Error::Validation {
                what: "cli",
                detail: format!("unknown sweep kind {other:?} (expected dow or weather)"),
            })
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation { what: "cli", detail: format!("threads: {e}") })?;
    }

    let datasets = load_datasets(&demand, &weather, &winters)?;
    let fit = match &fit_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(p.display().to_string(), e))?;
            fit_from_json(&text, &p.display().to_string())?
        }
        None => fit_ols(&build_design_matrix(&datasets)?)?,
    };
    let units = load_fleet(&fleet_path)?;
    let dist = convolve_fleet(&units, grid_step)?;
    let mut scenarios = load_scenarios(&scenarios_path)?;
    scenarios.sort_by(|a, b| a.id.cmp(&b.id));

    let window_spec = windows.as_deref().map(parse_windows).transpose()?;
    let mut all_rows = Vec::new();
    let mut window_rows = Vec::new();
    for scenario in &scenarios {
        let scenario = match (target_lole, target_lolh) {
            (None, None) => scenario.clone(),
            (lole_t, lolh_t) => {
                let (metric, target) = match lole_t {
                    Some(t) => (RiskMetric::DailyLole, t),
                    None => (RiskMetric::HourlyLolh, lolh_t.unwrap()),
                };
                let cal = calibrate_year_effect(
                    &fit, &datasets, scenario, &dist, metric, mode, target,
                )?;
                println!(
                    "calibrated scenario={} phi_mw={} achieved={} iterations={}",
                    cal.scenario_id, cal.phi_mw, cal.achieved, cal.iterations
                );
                scenario.with_phi(cal.phi_mw)
            }
        };
        let rows = shift_sweep(&fit, &datasets, &scenario, &dist, kind, mode, with_lolh)?;
        if let (Some(spec), SweepKind::Weather { .. }) = (&window_spec, kind) {
            window_rows.extend(window_average(&rows, spec)?);
        }
        all_rows.extend(rows);
    }

    write_results_csv(&all_rows, &out)?;
    write_results_json(&all_rows, &out.with_extension("json"))?;
    println!("wrote {} rows to {}", all_rows.len(), out.display());
    if !window_rows.is_empty() {
        let path = windows_path(&out);
        write_windows_csv(&window_rows, &path)?;
        println!("wrote {} window rows to {}", window_rows.len(), path.display());
    }
    Ok(())
}

fn windows_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}_windows.csv"))
}

/// Winters named on the command line, or every `demand_<id>.csv` in the
/// demand directory when the flag is absent.
fn winter_ids(range: Option<&str>, demand_dir: &Path) -> Result<Vec<i32>> {
    match range {
        Some(text) => {
            let (a, b) = parse_i32_range(text)?;
            if b < a {
                return Err(Error::Validation {
                    what: "cli",
                    detail: format!("winter range {text}: end before start"),
                });
            }
            Ok((a..=b).collect())
        }
        None => {
            let mut ids = Vec::new();
            let entries = std::fs::read_dir(demand_dir)
                .map_err(|e| Error::io(demand_dir.display().to_string(), e))?;
            for entry in entries {
                let entry = entry.map_err(|e| Error::io(demand_dir.display().to_string(), e))?;
                let name = entry.file_name().to_string_lossy().into_owned();
                if let Some(id) = name
                    .strip_prefix("demand_")
                    .and_then(|s| s.strip_suffix(".csv"))
                    .and_then(|s| s.parse::<i32>().ok())
                {
                    ids.push(id);
                }
            }
            ids.sort_unstable();
            if ids.is_empty() {
                return Err(Error::Validation {
                    what: "cli",
                    detail: format!(
                        "no demand_<winter>.csv files in {} and no --winters given",
                        demand_dir.display()
                    ),
                });
            }
            Ok(ids)
        }
    }
}

fn load_datasets(demand: &Path, weather: &Path, winters: &[i32]) -> Result<Vec<WinterDataset>> {
    winters
        .iter()
        .map(|&w| {
            load_winter(
                &demand.join(format!("demand_{w}.csv")),
                &weather.join(format!("weather_{w}.csv")),
                w,
            )
        })
        .collect()
}

fn parse_i32_range(text: &str) -> Result<(i32, i32)> {
    let bad = |detail: String| Error::Validation { what: "cli", detail };
    match text.split_once("..") {
        Some((a, b)) => Ok((
            a.trim().parse().map_err(|e| bad(format!("range {text}: {e}")))?,
            b.trim().parse().map_err(|e| bad(format!("range {text}: {e}")))?,
        )),
        None => {
            let v: i32 = text.trim().parse().map_err(|e| bad(format!("range {text}: {e}")))?;
            Ok((v, v))
        }
    }
}

/// `default` for the standard five windows, or comma-separated `A..B` pairs.
fn parse_windows(text: &str) -> Result<Vec<(i32, i32)>> {
    if text.trim() == "default" {
        return Ok(STANDARD_WINDOWS.to_vec());
    }
    text.split(',').map(|part| parse_i32_range(part.trim())).collect()
}
