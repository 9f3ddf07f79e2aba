//! Release acceptance gate. Each test is one checklist item and prints a
//! single PASS line when it holds; a failure panics with the offending
//! numbers. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::ContinuousCDF;

use shiftra::adequacy::{
    calibrate_year_effect, convolve_fleet, lole, lolh, lolp, shift_sweep, smear_gaussian,
    window_average, write_fleet_csv, GeneratingUnit, RiskMetric, SweepKind,
};
use shiftra::demand::{build_design_matrix, fit_ols, CoefficientSet, RegressionFit};
use shiftra::ingest::synth::{default_coefficients, generate, ColdSpell, HolidayDip, SynthSpec};
use shiftra::ingest::{winter_start, HourlySeries, WinterCalendar, WinterDataset};
use shiftra::scenario::{map_to_scenario, shift_dow, shift_weather, ResidualMode, Scenario};
use shiftra::weather::wind_power;

fn scenario(id: &str, lambda: f64, gamma: f64, off: f64, on: f64, phi: Option<f64>) -> Scenario {
    Scenario {
        id: id.to_string(),
        lambda_mw_per_c: lambda,
        gamma_mw_per_ms: gamma,
        offshore_mw: off,
        onshore_mw: on,
        phi_mw: phi,
    }
}

/// A fit whose coefficients are exactly the planted set, bypassing OLS so
/// identity mappings carry no estimation error at all.
fn planted_fit(coefficients: CoefficientSet) -> RegressionFit {
    RegressionFit {
        coefficients,
        standard_errors: BTreeMap::new(),
        residuals: BTreeMap::new(),
        residual_sd: 0.0,
        adjusted_r2: 1.0,
        lag1_autocorr: 0.0,
        n_obs: 0,
        n_params: 0,
    }
}

fn uniform_fleet(n: usize, capacity_mw: f64, availability: f64) -> Vec<GeneratingUnit> {
    (0..n)
        .map(|i| GeneratingUnit {
            unit_id: format!("u{i}"),
            capacity_mw,
            availability,
        })
        .collect()
}

#[test]
fn convolution_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    for case in 0..50 {
        let n = rng.gen_range(1..=12usize);
        let units: Vec<GeneratingUnit> = (0..n)
            .map(|i| GeneratingUnit {
                unit_id: format!("f{case}_u{i}"),
                capacity_mw: rng.gen_range(1..=60u32) as f64,
                availability: rng.gen::<f64>(),
            })
            .collect();
        let dist = convolve_fleet(&units, 1).unwrap();

        let total: usize = units.iter().map(|u| u.capacity_mw as usize).sum();
        let mut oracle = vec![0.0f64; total + 1];
        for mask in 0u32..(1 << n) {
            let mut cap = 0usize;
            let mut p = 1.0;
            for (i, u) in units.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    cap += u.capacity_mw as usize;
                    p *= u.availability;
                } else {
                    p *= 1.0 - u.availability;
                }
            }
            oracle[cap] += p;
        }

        assert_eq!(dist.origin_mw(), 0);
        assert_eq!(dist.pmf().len(), total + 1, "support size, fleet {case}");
        for (j, &q) in oracle.iter().enumerate() {
            let err = (dist.pmf()[j] - q).abs();
            assert!(
                err < 1e-12,
                "fleet {case}: pmf[{j}] = {} vs enumerated {q} (err {err:e})",
                dist.pmf()[j]
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("PASS: convolution matches exhaustive enumeration on 50 random fleets (<1e-12, {elapsed:?})");
}

fn coefficient_rows(truth: &CoefficientSet, est: &CoefficientSet) -> Vec<(String, f64, f64)> {
    let mut rows = vec![
        ("intercept".to_string(), truth.alpha, est.alpha),
        ("te".to_string(), truth.lambda1, est.lambda1),
        ("dsn".to_string(), truth.beta1, est.beta1),
        ("dsn2".to_string(), truth.beta2, est.beta2),
        ("ws".to_string(), truth.gamma1, est.gamma1),
    ];
    for (i, d) in ["mon", "tue", "wed", "thu", "fri", "sat"].iter().enumerate() {
        rows.push((format!("dow_{d}"), truth.omega[i], est.omega[i]));
    }
    for (w, v) in &truth.phi {
        rows.push((format!("year_{w}"), *v, est.phi[w]));
    }
    rows
}

#[test]
fn regression_recovers_planted_coefficients_within_three_sigma() {
    let ids: Vec<i32> = (2009..=2019).collect();
    let truth = default_coefficients(&ids);
    let n_reps = 200u64;
    let mut misses: BTreeMap<String, u32> = BTreeMap::new();
    let mut r2_sum = 0.0;

    for rep in 0..n_reps {
        let spec = SynthSpec {
            first_winter: 2009,
            n_winters: 11,
            rng_seed: 40_000 + rep,
            residual_sd_mw: 500.0,
            coefficients: truth.clone(),
            cold_spell: None,
            holiday_dip: None,
        };
        let winters = generate(&spec).unwrap();
        let fit = fit_ols(&build_design_matrix(&winters).unwrap()).unwrap();
        r2_sum += fit.adjusted_r2;
        for (name, true_val, est) in coefficient_rows(&truth, &fit.coefficients) {
            let se = fit.standard_error(&name).expect("column has an SE");
            if (est - true_val).abs() > 3.0 * se {
                *misses.entry(name).or_insert(0) += 1;
            }
        }
    }

    let mean_r2 = r2_sum / n_reps as f64;
    assert!(
        (0.955..=0.985).contains(&mean_r2),
        "mean adjusted R^2 = {mean_r2}, noise level no longer sits near 0.97"
    );
    // 99% of 200 replications = at most 2 misses for any one coefficient.
    for (name, count) in &misses {
        assert!(
            *count <= 2,
            "{name} fell outside 3 SE in {count}/200 replications"
        );
    }
    println!(
        "PASS: every coefficient recovered within 3 SE in >=99% of 200 replications (worst miss count {}, mean adj R^2 {mean_r2:.4})",
        misses.values().max().unwrap_or(&0)
    );
}

#[test]
fn shift_transforms_satisfy_their_identities() {
    let ids: Vec<i32> = (2009..=2011).collect();
    let spec = SynthSpec {
        first_winter: 2009,
        n_winters: 3,
        rng_seed: 303,
        residual_sd_mw: 400.0,
        coefficients: default_coefficients(&ids),
        cold_spell: None,
        holiday_dip: None,
    };
    let winters = generate(&spec).unwrap();
    let fit = fit_ols(&build_design_matrix(&winters).unwrap()).unwrap();
    let scn = scenario("ids", -600.0, 125.0, 9_000.0, 8_000.0, Some(2_000.0));
    let bases: Vec<_> = winters
        .iter()
        .map(|d| map_to_scenario(&fit, d, &scn).unwrap())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..1000 {
        let wi = rng.gen_range(0..winters.len());
        let k = rng.gen_range(-21..=21i32);
        let tau = rng.gen_range(-25..=25i32);
        let ds = &winters[wi];
        let base = &bases[wi];
        let cal = ds.calendar();

        // k = 0 and tau = 0 are exact identities.
        let d0 = shift_dow(base, cal, 0).unwrap();
        assert!(d0 == *base, "case {case}: shift_dow(0) changed the series");
        assert_eq!(d0.empirical(), base.empirical());
        let (w0, _) = shift_weather(base, ds, &scn, 0).unwrap();
        assert!(w0 == *base, "case {case}: shift_weather(0) changed the series");
        assert_eq!(w0.central(), base.central());

        // Rotating by k and by k - 7 is the same alignment.
        let dk = shift_dow(base, cal, k).unwrap();
        let dk7 = shift_dow(base, cal, k - 7).unwrap();
        assert!(dk == dk7, "case {case}: k = {k} and k - 7 disagree");
        assert_eq!(dk.empirical(), dk7.empirical());

        // Shift then inverse shift restores the base bit for bit.
        let back = shift_dow(&dk, cal, -k).unwrap();
        assert!(back == *base, "case {case}: dow round trip k = {k}");
        let (wt, _) = shift_weather(base, ds, &scn, tau).unwrap();
        let (wback, _) = shift_weather(&wt, ds, &scn, -tau).unwrap();
        assert!(wback == *base, "case {case}: weather round trip tau = {tau}");
        let mixed = shift_dow(&wt, cal, k).unwrap();
        let (mixed_back, _) = shift_weather(&shift_dow(&mixed, cal, -k).unwrap(), ds, &scn, -tau).unwrap();
        assert!(mixed_back == *base, "case {case}: mixed round trip");

        // Residuals stay attached to their dates under every shift.
        for (a, b) in dk.residuals().iter().zip(base.residuals()) {
            assert_eq!(a.to_bits(), b.to_bits(), "case {case}: dow shift touched a residual");
        }
        for (a, b) in wt.residuals().iter().zip(base.residuals()) {
            assert_eq!(a.to_bits(), b.to_bits(), "case {case}: weather shift touched a residual");
        }
    }
    println!("PASS: shift identities (zero shift, k vs k-7, inverse round trip, residual attachment) hold bit-exactly on 1000 random cases");
}

#[test]
fn dow_rotation_pairs_with_opposite_weather_shift() {
    // With beta1 = beta2 = 0 and zero residuals the day pairing
    // dow(+k)[s] <-> weather(-k)[s + k] matches exactly: both carry day s's
    // weather and day (s + k)'s weekday label.
    let coeffs = CoefficientSet {
        alpha: 46_415.16,
        lambda1: -562.47,
        beta1: 0.0,
        beta2: 0.0,
        gamma1: 125.96,
        omega: [-3_301.58, 1_664.20, 1_720.86, 1_576.71, 1_436.08, -3_616.42],
        phi: [(2009, 600.0)].into_iter().collect(),
        reference_winter: 2010,
    };
    let spec = SynthSpec {
        first_winter: 2009,
        n_winters: 2,
        rng_seed: 505,
        residual_sd_mw: 0.0,
        coefficients: coeffs.clone(),
        cold_spell: None,
        holiday_dip: None,
    };
    let winters = generate(&spec).unwrap();
    let fit = planted_fit(coeffs);
    let scn = scenario("pair", fit.coefficients.lambda1, fit.coefficients.gamma1, 9_000.0, 8_000.0, Some(350.0));
    let dist = convolve_fleet(&uniform_fleet(40, 900.0, 0.92), 1).unwrap();

    for ds in &winters {
        let base = map_to_scenario(&fit, ds, &scn).unwrap();
        let wind0 = wind_power(ds.cf_onshore(), ds.cf_offshore(), &scn).unwrap();
        for k in -3..=3i32 {
            let a = lole(&dist, &shift_dow(&base, ds.calendar(), k).unwrap(), &wind0, ResidualMode::Empirical).unwrap();
            let (swd, wind_s) = shift_weather(&base, ds, &scn, -k).unwrap();
            let b = lole(&dist, &swd, &wind_s, ResidualMode::Empirical).unwrap();
            let n = a.per_day_lolp.len() as i32;
            for s in 0..n {
                let t = s + k;
                if t < 0 || t >= n {
                    continue;
                }
                let pa = a.per_day_lolp[s as usize];
                let pb = b.per_day_lolp[t as usize];
                assert!(
                    (pa - pb).abs() <= 1e-10,
                    "winter {}, k = {k}, day {s}: dow LOLP {pa} vs weather LOLP {pb}",
                    ds.winter_id()
                );
            }
        }
    }
    println!("PASS: per-day LOLPs under dow(+k) and weather(-k) pair within 1e-10 on overlapping dates for k in -3..=3");
}

#[test]
fn smeared_lolp_matches_the_gaussian_mixture() {
    let ids: Vec<i32> = (2009..=2011).collect();
    let spec = SynthSpec {
        first_winter: 2009,
        n_winters: 3,
        rng_seed: 606,
        residual_sd_mw: 600.0,
        coefficients: default_coefficients(&ids),
        cold_spell: None,
        holiday_dip: None,
    };
    let winters = generate(&spec).unwrap();
    let fit = fit_ols(&build_design_matrix(&winters).unwrap()).unwrap();
    let sigma = fit.residual_sd;

    let mut fleet = uniform_fleet(25, 1_100.0, 0.90);
    fleet.extend((0..20).map(|i| GeneratingUnit {
        unit_id: format!("m{i}"),
        capacity_mw: 700.0,
        availability: 0.94,
    }));
    fleet.extend((0..20).map(|i| GeneratingUnit {
        unit_id: format!("s{i}"),
        capacity_mw: 380.0,
        availability: 0.88,
    }));
    let exact = convolve_fleet(&fleet, 1).unwrap();
    let smeared = smear_gaussian(&exact, sigma).unwrap();

    let scn = scenario("mix", -600.0, 125.0, 2_000.0, 2_000.0, Some(300.0));
    let nets: Vec<Vec<f64>> = winters
        .iter()
        .map(|ds| {
            let sd = map_to_scenario(&fit, ds, &scn).unwrap();
            let wind = wind_power(ds.cf_onshore(), ds.cf_offshore(), &scn).unwrap();
            sd.central()
                .iter()
                .enumerate()
                .map(|(t, d)| d - wind.at_peak(ds.winter_id(), t as i64).unwrap())
                .collect()
        })
        .collect();

    let n01 = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let wi = rng.gen_range(0..nets.len());
        let t = rng.gen_range(0..nets[wi].len());
        let net = nets[wi][t];
        // P(X + eps < net) summed over the exact outage states.
        let mixture: f64 = exact
            .pmf()
            .iter()
            .enumerate()
            .map(|(j, &p)| p * n01.cdf((net - exact.level_mw(j)) / sigma))
            .sum();
        let read = lolp(&smeared, net);
        let err = (read - mixture).abs();
        worst = worst.max(err);
        assert!(
            err <= 1e-4,
            "winter index {wi}, day {t}: smeared LOLP {read} vs mixture {mixture} (err {err:e})"
        );
    }
    println!("PASS: pre-smeared LOLP matches the exact Gaussian mixture within 1e-4 on 100 random days (worst {worst:.2e})");
}

#[test]
fn calibration_hits_risk_targets() {
    let ids: Vec<i32> = (2009..=2011).collect();
    let spec = SynthSpec {
        first_winter: 2009,
        n_winters: 3,
        rng_seed: 808,
        residual_sd_mw: 500.0,
        coefficients: default_coefficients(&ids),
        cold_spell: None,
        holiday_dip: None,
    };
    let winters = generate(&spec).unwrap();
    let fit = fit_ols(&build_design_matrix(&winters).unwrap()).unwrap();
    let dist = convolve_fleet(&uniform_fleet(52, 900.0, 0.93), 1).unwrap();
    let scn = scenario("cal", -600.0, 125.0, 4_000.0, 3_000.0, None);

    let mut last_phi = f64::NEG_INFINITY;
    for target in [0.01, 0.1, 1.0] {
        let r = calibrate_year_effect(
            &fit,
            &winters,
            &scn,
            &dist,
            RiskMetric::DailyLole,
            ResidualMode::Stochastic,
            target,
        )
        .unwrap();
        assert!(
            (r.achieved - target).abs() <= 1e-4,
            "target {target}: achieved {} (phi = {} MW)",
            r.achieved,
            r.phi_mw
        );
        assert!(r.iterations < 100, "target {target}: {} evaluations", r.iterations);
        assert!(r.phi_mw > last_phi, "phi must rise with the target");
        last_phi = r.phi_mw;
    }
    println!("PASS: calibration reaches LOLE targets 0.01/0.1/1.0 within 1e-4 in under 100 iterations each");
}

#[test]
fn weekend_event_partitions_the_dow_sweep() {
    // Weekdays +4000 MW over the Sat/Sun level; a 2-day demand event is
    // planted on Sat 8 / Sun 9 January so it is fully masked at k = 0.
    let coeffs = CoefficientSet {
        alpha: 46_000.0,
        lambda1: -300.0,
        beta1: 0.0,
        beta2: 0.0,
        gamma1: 0.0,
        omega: [4_000.0, 4_000.0, 4_000.0, 4_000.0, 4_000.0, 0.0],
        phi: [(2009, 500.0)].into_iter().collect(),
        reference_winter: 2010,
    };
    let spec = SynthSpec {
        first_winter: 2009,
        n_winters: 2,
        rng_seed: 909,
        residual_sd_mw: 0.0,
        coefficients: coeffs,
        cold_spell: None,
        holiday_dip: Some(HolidayDip {
            start_month: 1,
            start_day: 8,
            end_month: 1,
            end_day: 9,
            suppression_mw: -9_000.0, // a 2-day demand surge
            winter: Some(2010),
        }),
    };
    let winters = generate(&spec).unwrap();
    let ds = &winters[1];
    let cal = ds.calendar();
    let i8 = cal
        .dates()
        .iter()
        .position(|d| *d == NaiveDate::from_ymd_opt(2011, 1, 8).unwrap())
        .unwrap();
    assert_eq!(cal.dow()[i8], 6, "8 January 2011 is a Saturday");
    assert_eq!(cal.dow()[i8 + 1], 7, "9 January 2011 is a Sunday");

    let fit = fit_ols(&build_design_matrix(&winters).unwrap()).unwrap();
    let scn = scenario("wkd", fit.coefficients.lambda1, fit.coefficients.gamma1, 0.0, 0.0, Some(0.0));
    let base = map_to_scenario(&fit, ds, &scn).unwrap();
    let emp = base.empirical();
    let event_hi = emp[i8].max(emp[i8 + 1]);

    // Threshold halfway into the +4000 MW weekday step, with a sigma small
    // enough that masked and unmasked event days sit many sigma apart.
    let unit = 50.0;
    let avail = 0.95;
    let n_units = ((event_hi + 2_000.0) / (unit * avail)).round() as usize;
    let dist = convolve_fleet(&uniform_fleet(n_units, unit, avail), 1).unwrap();

    let rows = shift_sweep(
        &fit,
        std::slice::from_ref(ds),
        &scn,
        &dist,
        SweepKind::DayOfWeek,
        ResidualMode::Empirical,
        false,
    )
    .unwrap();
    assert_eq!(rows.len(), 7);
    let mut loles: Vec<f64> = rows.iter().map(|r| r.lole).collect();
    loles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // 1 alignment leaves both event days on the weekend, 2 expose one day,
    // 4 expose both.
    assert!(
        loles[0] < 0.1 * loles[6],
        "minimal {} vs maximal {}",
        loles[0],
        loles[6]
    );
    assert!(loles[1] > 10.0 * loles[0], "tier gap above the fully masked alignment");
    assert!(loles[2] < 1.3 * loles[1], "the two one-day tiers match");
    assert!(loles[3] > 1.4 * loles[2], "tier gap between one-day and two-day alignments");
    assert!(loles[6] < 1.3 * loles[3], "the four two-day tiers match");
    println!(
        "PASS: weekend event partitions the 7 dow alignments 1/2/4 (LOLEs {:.3e} | {:.3} {:.3} | {:.3}..{:.3})",
        loles[0], loles[1], loles[2], loles[3], loles[6]
    );
}

#[test]
fn masked_cold_spell_unmasks_as_windows_grow() {
    // A strong cold spell sits inside a Christmas demand dip; weather shifts
    // move it out from under the suppression.
    let coeffs = CoefficientSet {
        alpha: 46_000.0,
        lambda1: -600.0,
        beta1: 0.0,
        beta2: 0.0,
        gamma1: 0.0,
        omega: [0.0; 6],
        phi: [(2009, 400.0)].into_iter().collect(),
        reference_winter: 2010,
    };
    let spec = SynthSpec {
        first_winter: 2009,
        n_winters: 2,
        rng_seed: 1010,
        residual_sd_mw: 0.0,
        coefficients: coeffs.clone(),
        cold_spell: Some(ColdSpell {
            start_month: 12,
            start_day: 24,
            length_days: 5,
            temp_delta_c: -35.0,
            winter: Some(2010),
        }),
        holiday_dip: Some(HolidayDip {
            start_month: 12,
            start_day: 20,
            end_month: 1,
            end_day: 2,
            suppression_mw: 6_000.0,
            winter: Some(2010),
        }),
    };
    let winters = generate(&spec).unwrap();
    let ds = &winters[1];
    let fit = planted_fit(coeffs);
    let scn = scenario("xmas", fit.coefficients.lambda1, fit.coefficients.gamma1, 0.0, 0.0, Some(0.0));

    let base = map_to_scenario(&fit, ds, &scn).unwrap();
    let masked_max = base.empirical().iter().cloned().fold(f64::MIN, f64::max);
    let (s14, _) = shift_weather(&base, ds, &scn, -14).unwrap();
    let unmasked_max = s14.empirical().iter().cloned().fold(f64::MIN, f64::max);
    assert!(
        unmasked_max > masked_max + 3_000.0,
        "the -14 day shift should expose the spell ({masked_max} -> {unmasked_max})"
    );

    let unit = 50.0;
    let avail = 0.95;
    let mean = masked_max + 0.35 * (unmasked_max - masked_max);
    let dist = convolve_fleet(&uniform_fleet((mean / (unit * avail)).round() as usize, unit, avail), 1).unwrap();

    let rows = shift_sweep(
        &fit,
        std::slice::from_ref(ds),
        &scn,
        &dist,
        SweepKind::Weather { tau_lo: -21, tau_hi: 20 },
        ResidualMode::Empirical,
        false,
    )
    .unwrap();

    let windows = [(-3, 3), (-7, 6), (-10, 10), (-14, 13)];
    let table = window_average(&rows, &windows).unwrap();
    let means: Vec<f64> = windows
        .iter()
        .map(|w| {
            table
                .iter()
                .find(|r| r.winter_id.is_none() && r.window == *w)
                .unwrap()
                .mean_lole
        })
        .collect();
    for i in 1..means.len() {
        assert!(
            means[i] > means[i - 1],
            "window means must rise strictly: {means:?}"
        );
    }

    let lole_at = |tau: i32| {
        rows.iter()
            .find(|r| r.shift.tau == tau)
            .map(|r| r.lole)
            .unwrap()
    };
    assert!(
        lole_at(-14) >= 1.5 * lole_at(0),
        "tau = -14 LOLE {} vs tau = 0 LOLE {}",
        lole_at(-14),
        lole_at(0)
    );
    println!(
        "PASS: window-averaged LOLE rises strictly as windows widen ({:.2e} -> {:.3} -> {:.3} -> {:.3}) and tau=-14 is >=1.5x tau=0",
        means[0], means[1], means[2], means[3]
    );
}

/// A winter whose weather is deterministic trig wiggles, wind capacity
/// factors are zero, and demand has a controlled intra-day profile.
fn trig_winter(winter: i32, phase: f64, hour_dip: &[f64; 24]) -> WinterDataset {
    let span_start = NaiveDate::from_ymd_opt(winter, 10, 1).unwrap();
    let span_end = NaiveDate::from_ymd_opt(winter + 1, 4, 30).unwrap();
    let span_days = (span_end - span_start).num_days() as usize + 1;
    let hours = span_days * 24;
    let t0 = span_start.and_hms_opt(0, 0, 0).unwrap();

    let ta: Vec<f64> = (0..hours)
        .map(|h| 4.0 + 4.0 * ((h as f64) * 0.00143 + phase).sin() + 2.0 * ((h as f64) * 0.0101).cos())
        .collect();
    let ws: Vec<f64> = (0..hours)
        .map(|h| 6.0 + 2.0 * ((h as f64) * 0.0057 + 1.0 + phase).sin())
        .collect();
    let zeros = vec![0.0; hours];

    let cal = WinterCalendar::for_winter(winter);
    let pad = (winter_start(winter) - span_start).num_days() as usize;
    let mut demand = Vec::with_capacity(cal.len() * 24);
    for t in 0..cal.len() {
        let ta_peak = ta[(pad + t) * 24 + 18];
        let peak = 45_500.0 + 1_500.0 * (0.07 * t as f64 + phase).sin() - 300.0 * ta_peak;
        for frac in hour_dip {
            demand.push(peak * (1.0 - frac));
        }
    }

    WinterDataset::new(
        cal,
        HourlySeries::new(t0, ta).unwrap(),
        HourlySeries::new(t0, ws).unwrap(),
        HourlySeries::new(t0, zeros.clone()).unwrap(),
        HourlySeries::new(t0, zeros).unwrap(),
        HourlySeries::new(winter_start(winter).and_hms_opt(0, 0, 0).unwrap(), demand).unwrap(),
    )
    .unwrap()
}

#[test]
fn flat_profiles_tie_lolh_to_lole() {
    let flat = [0.0f64; 24];
    let mut dipped = [0.08f64; 24];
    dipped[18] = 0.0; // the 18:00 peak keeps its value; every other hour is lower
    for (h, d) in dipped.iter_mut().enumerate() {
        if h < 8 {
            *d = 0.20;
        }
    }

    let dist = convolve_fleet(&uniform_fleet(50, 1_000.0, 0.93), 1).unwrap();

    for (profile, label) in [(flat, "flat"), (dipped, "dipped")] {
        let winters = vec![trig_winter(2009, 0.3, &profile), trig_winter(2010, 1.1, &profile)];
        let fit = fit_ols(&build_design_matrix(&winters).unwrap()).unwrap();
        assert!(
            fit.coefficients.lambda1 < 0.0,
            "fixture demand must cool with temperature"
        );
        let scn = scenario("prof", fit.coefficients.lambda1, fit.coefficients.gamma1, 0.0, 0.0, Some(0.0));
        let ds = &winters[1];
        let base = map_to_scenario(&fit, ds, &scn).unwrap();
        let wind = wind_power(ds.cf_onshore(), ds.cf_offshore(), &scn).unwrap();
        let r = lolh(&dist, &base, ds, &wind, ResidualMode::Empirical).unwrap();
        let hourly = r.lolh.unwrap();
        assert!(r.lole > 0.01, "fixture must carry real risk, got LOLE {}", r.lole);

        if label == "flat" {
            assert!(
                (hourly - 24.0 * r.lole).abs() <= 1e-9,
                "flat profile: LOLH {hourly} vs 24 x LOLE {}",
                24.0 * r.lole
            );
        } else {
            assert!(
                hourly <= 24.0 * r.lole + 1e-12,
                "dipped profile: LOLH {hourly} exceeds 24 x LOLE {}",
                24.0 * r.lole
            );
            assert!(
                hourly < 24.0 * r.lole,
                "dipped profile should be strictly below the flat bound"
            );
        }
    }
    println!("PASS: flat profile gives LOLH = 24 x LOLE within 1e-9; nonpositive offsets give LOLH <= 24 x LOLE");
}

#[test]
fn pipeline_is_byte_deterministic() {
    let bin = env!("CARGO_BIN_EXE_shiftra");
    let started = Instant::now();
    let root = tempfile::tempdir().unwrap();

    let mut fleet = Vec::new();
    for (count, cap, avail, tag) in [(20, 1_200.0, 0.91, "a"), (18, 800.0, 0.94, "b"), (20, 450.0, 0.88, "c")] {
        for i in 0..count {
            fleet.push(GeneratingUnit {
                unit_id: format!("{tag}{i}"),
                capacity_mw: cap,
                availability: avail,
            });
        }
    }
    let fleet_path = root.path().join("fleet.csv");
    write_fleet_csv(&fleet, &fleet_path).unwrap();
    let scn_path = root.path().join("scenarios.json");
    std::fs::write(
        &scn_path,
        r#"{"scenarios":[{"id":"s1","lambda_gw_per_c":-0.6,"gamma_gw_per_ms":0.125,"offshore_gw":16,"onshore_gw":14}]}"#,
    )
    .unwrap();

    let run = |args: &[&str]| -> Vec<u8> {
        let out = Command::new(bin).args(args).output().expect("spawn the cli");
        assert!(
            out.status.success(),
            "cli {:?} failed:\n{}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    // Printed paths necessarily differ between runs; strip them before comparing.
    let pipeline = |dir: &Path, threads: Option<&str>| -> String {
        let d = dir.to_str().unwrap();
        let fit = format!("{d}/fit.json");
        let results = format!("{d}/results.csv");
        let mut stdout = run(&[
            "synth", "--out", d, "--winters", "3", "--first-winter", "2009", "--seed", "42",
            "--residual-sd", "500",
        ]);
        stdout.extend(run(&[
            "fit", "--demand", d, "--winters", "2009..2011", "--out", &fit,
        ]));
        let mut risk = vec![
            "risk", "--demand", d, "--winters", "2009..2011", "--fit", &fit,
            "--fleet", fleet_path.to_str().unwrap(), "--scenarios", scn_path.to_str().unwrap(),
            "--mode", "stochastic", "--sweep", "weather", "--tau", "-21..20",
            "--windows", "default", "--lolh", "--target-lole", "0.1", "--out", &results,
        ];
        if let Some(t) = threads {
            risk.extend(["--threads", t]);
        }
        stdout.extend(run(&risk));
        String::from_utf8(stdout).unwrap().replace(d, "<out>")
    };

    let outputs = [
        "demand_2009.csv", "demand_2010.csv", "demand_2011.csv",
        "weather_2009.csv", "weather_2010.csv", "weather_2011.csv",
        "synth_spec.json", "fit.json", "results.csv", "results.json", "results_windows.csv",
    ];

    let dir_a = root.path().join("a");
    let dir_b = root.path().join("b");
    let out_a = pipeline(&dir_a, None);
    let out_b = pipeline(&dir_b, None);
    assert_eq!(out_a, out_b, "stdout differs between identical runs");
    for name in outputs {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let dir_t1 = root.path().join("t1");
    let dir_t8 = root.path().join("t8");
    let out_t1 = pipeline(&dir_t1, Some("1"));
    let out_t8 = pipeline(&dir_t8, Some("8"));
    assert_eq!(out_t1, out_t8, "stdout differs between 1 and 8 threads");
    for name in outputs {
        let t1 = std::fs::read(dir_t1.join(name)).unwrap();
        let t8 = std::fs::read(dir_t8.join(name)).unwrap();
        assert_eq!(t1, t8, "{name} differs between 1 and 8 threads");
        let a = std::fs::read(dir_a.join(name)).unwrap();
        assert_eq!(t1, a, "{name} differs between thread-pinned and default runs");
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "pipeline took {elapsed:?}");
    println!("PASS: synth -> fit -> risk is byte-identical across reruns and across 1/8 threads ({elapsed:?})");
}
