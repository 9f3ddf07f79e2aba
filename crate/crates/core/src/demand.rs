//! The daily-peak demand regression.
//!
//! Daily peak demand is modelled as
//!
//! ```text
//! D = alpha + lambda1*TE + beta1*DSN + beta2*DSN^2 + gamma1*WS
//!     + sum_m omega_m * DOW_m + sum_i phi_i * YEAR_i + residual
//! ```
//!
//! with `TE` the effective temperature at the 18:00 peak, `DSN` days since
//! 1 November, `WS` wind speed at the peak, six day-of-week indicators
//! (Sunday is the reference day), and one indicator per winter except the
//! reference winter (the latest one). The system is solved by QR
//! decomposition, not the normal equations; standard errors are classical
//! homoskedastic OLS errors.
//!
//! Calendar suppressions such as the Christmas holiday period are
//! deliberately *not* covariates: they stay in the residuals, attached to
//! their dates, which is what lets date-shift experiments expose demand that
//! the holiday masks in the historic record.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::WinterDataset;

/// Fitted (or planted) coefficients of the demand model, in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub alpha: f64,
    /// MW per °C of effective temperature; negative in a winter-peaking system.
    pub lambda1: f64,
    /// MW per day of season.
    pub beta1: f64,
    /// MW per squared day of season.
    pub beta2: f64,
    /// MW per m/s of peak wind speed.
    pub gamma1: f64,
    /// Day-of-week effects for Monday..Saturday; Sunday is the reference (0).
    pub omega: [f64; 6],
    /// Year effects by winter id; the reference winter's entry, when present,
    /// is pinned at 0. A fit lists every winter it saw.
    pub phi: BTreeMap<i32, f64>,
    pub reference_winter: i32,
}

impl CoefficientSet {
    /// Day-of-week effect for `dow` in 1..=7 (Sunday, 7, is the reference).
    pub fn omega_for(&self, dow: u8) -> f64 {
        debug_assert!((1..=7).contains(&dow));
        if dow == 7 {
            0.0
        } else {
            self.omega[dow as usize - 1]
        }
    }

    /// Year effect for a winter. Zero for the reference winter; an error for
    /// winters the fit never saw.
    pub fn phi_for(&self, winter_id: i32) -> Result<f64> {
        if winter_id == self.reference_winter {
            return Ok(0.0);
        }
        self.phi.get(&winter_id).copied().ok_or_else(|| {
            Error::Contract(format!(
                "winter {winter_id} has no fitted year effect (fit covers {:?} with reference {})",
                self.phi.keys().collect::<Vec<_>>(),
                self.reference_winter
            ))
        })
    }

    /// Evaluate the regression mean for one observation.
    pub fn central(&self, te: f64, dsn: f64, ws: f64, dow: u8, winter_id: i32) -> Result<f64> {
        Ok(self.alpha
            + self.lambda1 * te
            + self.beta1 * dsn
            + self.beta2 * (dsn * dsn)
            + self.gamma1 * ws
            + self.omega_for(dow)
            + self.phi_for(winter_id)?)
    }
}

/// The regression design: response, covariate matrix, and row/column labels.
///
/// Column order is fixed and documented: intercept, te, dsn, dsn2, ws, six
/// day-of-week indicators (Monday..Saturday), then one indicator per
/// non-reference winter in ascending order.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<String>,
    /// (winter_id, date) for each row, in row order.
    pub row_keys: Vec<(i32, NaiveDate)>,
    pub winter_ids: Vec<i32>,
    pub reference_winter: i32,
}

/// Number of non-indicator columns before the day-of-week block.
const BASE_COLS: usize = 5;

/// Build the design matrix for a set of winters.
///
/// Requires at least two winters with distinct ids (year effects need a
/// reference and at least one indicator). The reference winter is the
/// latest; the reference day-of-week is Sunday.
pub fn build_design_matrix(winters: &[WinterDataset]) -> Result<DesignMatrix> {
    build_design_matrix_with_reference(winters, 7, None)
}

/// As [`build_design_matrix`] but with an explicit reference day-of-week
/// and (optionally) reference winter. The alternative references exist so
/// tests can verify that fitted values do not depend on the choice; the
/// production column layout is the default one.
pub(crate) fn build_design_matrix_with_reference(
    winters: &[WinterDataset],
    reference_dow: u8,
    reference_winter: Option<i32>,
) -> Result<DesignMatrix> {
    if winters.len() < 2 {
        return Err(Error::Validation {
            what: "fit input",
            detail: format!(
                "{} winter(s) supplied; year effects need at least two",
                winters.len()
            ),
        });
    }
    let mut winter_ids: Vec<i32> = winters.iter().map(|w| w.winter_id()).collect();
    winter_ids.sort_unstable();
    if winter_ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation {
            what: "fit input",
            detail: "duplicate winter ids in fit input".into(),
        });
    }
    let reference_winter = reference_winter.unwrap_or(*winter_ids.last().unwrap());
    if !winter_ids.contains(&reference_winter) {
        return Err(Error::Validation {
            what: "fit input",
            detail: format!("reference winter {reference_winter} is not among the inputs"),
        });
    }
    let indicator_winters: Vec<i32> = winter_ids
        .iter()
        .copied()
        .filter(|w| *w != reference_winter)
        .collect();

    let dow_names = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];
    let indicator_dows: Vec<u8> = (1..=7).filter(|d| *d != reference_dow).collect();

    let mut column_names = vec![
        "intercept".to_string(),
        "te".to_string(),
        "dsn".to_string(),
        "dsn2".to_string(),
        "ws".to_string(),
    ];
    for d in &indicator_dows {
        column_names.push(format!("dow_{}", dow_names[*d as usize - 1]));
    }
    for w in &indicator_winters {
        column_names.push(format!("year_{w}"));
    }

    let n: usize = winters.iter().map(|w| w.calendar().len()).sum();
    let p = column_names.len();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    let mut row_keys = Vec::with_capacity(n);

    let mut row = 0;
    for ds in winters {
        let cal = ds.calendar();
        let te = ds.te_at_peak();
        let ws = ds.ws_at_peak();
        let demand = ds.observed_peak_demand();
        for t in 0..cal.len() {
            let dsn = cal.dsn()[t] as f64;
            x[(row, 0)] = 1.0;
            x[(row, 1)] = te[t];
            x[(row, 2)] = dsn;
            x[(row, 3)] = dsn * dsn;
            x[(row, 4)] = ws[t];
            if let Some(j) = indicator_dows.iter().position(|d| *d == cal.dow()[t]) {
                x[(row, BASE_COLS + j)] = 1.0;
            }
            if let Some(j) = indicator_winters.iter().position(|w| *w == ds.winter_id()) {
                x[(row, BASE_COLS + 6 + j)] = 1.0;
            }
            y[row] = demand[t];
            row_keys.push((ds.winter_id(), cal.dates()[t]));
            row += 1;
        }
    }

    Ok(DesignMatrix {
        x,
        y,
        column_names,
        row_keys,
        winter_ids,
        reference_winter,
    })
}

/// A fitted demand model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub coefficients: CoefficientSet,
    /// Classical OLS standard errors, keyed like the design columns.
    pub standard_errors: BTreeMap<String, f64>,
    /// Residual per (winter, date), MW. Residuals stay attached to their
    /// dates through every downstream transform.
    pub residuals: BTreeMap<(i32, NaiveDate), f64>,
    /// Sample standard deviation of the residuals, MW. This is the sigma
    /// that parameterises the stochastic residual term.
    pub residual_sd: f64,
    pub adjusted_r2: f64,
    /// Lag-1 autocorrelation of residuals over consecutive dates within each
    /// winter (pairs never straddle the summer gap).
    pub lag1_autocorr: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

impl RegressionFit {
    pub fn standard_error(&self, column: &str) -> Option<f64> {
        self.standard_errors.get(column).copied()
    }

    /// Residual for one (winter, date).
    pub fn residual(&self, winter_id: i32, date: NaiveDate) -> Option<f64> {
        self.residuals.get(&(winter_id, date)).copied()
    }
}

/// Fit the demand model by QR decomposition.
///
/// Rank deficiency is reported as a singularity error naming the offending
/// column and the column it is collinear with, rather than producing
/// garbage coefficients through the normal equations.
pub fn fit_ols(design: &DesignMatrix) -> Result<RegressionFit> {
    let n = design.x.nrows();
    let p = design.x.ncols();
    if n <= p {
        return Err(Error::Validation {
            what: "fit input",
            detail: format!("{n} observations cannot identify {p} parameters"),
        });
    }

    let qr = design.x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    for j in 0..p {
        if r[(j, j)].abs() <= 1e-10 * max_diag {
            let (other, _) = most_collinear_with(&design.x, j);
            return Err(Error::Singular {
                col_a: design.column_names[j].clone(),
                col_b: design.column_names[other].clone(),
            });
        }
    }

    let qty = qr.q().transpose() * &design.y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Contract("upper-triangular solve failed".into()))?;

    let fitted = &design.x * &beta;
    let resid = &design.y - &fitted;
    let sse: f64 = resid.iter().map(|e| e * e).sum();
    let sigma2 = sse / (n - p) as f64;

    // (X'X)^-1 = R^-1 R^-T from the QR factors.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Contract("upper-triangular solve failed".into()))?;
    let cov = &r_inv * r_inv.transpose() * sigma2;

    let mut standard_errors = BTreeMap::new();
    for (j, name) in design.column_names.iter().enumerate() {
        standard_errors.insert(name.clone(), cov[(j, j)].sqrt());
    }

    let ybar = design.y.mean();
    let sst: f64 = design.y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let adjusted_r2 = 1.0 - (sse / (n - p) as f64) / (sst / (n - 1) as f64);

    let mut residuals = BTreeMap::new();
    for (i, key) in design.row_keys.iter().enumerate() {
        residuals.insert(*key, resid[i]);
    }
    let residual_sd = (sse / (n - 1) as f64).sqrt();

    // Lag-1 autocorrelation over within-winter consecutive dates only.
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        den += resid[i] * resid[i];
        if i + 1 < n {
            let (w0, d0) = design.row_keys[i];
            let (w1, d1) = design.row_keys[i + 1];
            if w0 == w1 && (d1 - d0).num_days() == 1 {
                num += resid[i] * resid[i + 1];
            }
        }
    }
    let lag1_autocorr = if den > 0.0 { num / den } else { 0.0 };

    let coefficients = coefficients_from_solution(design, &beta)?;

    Ok(RegressionFit {
        coefficients,
        standard_errors,
        residuals,
        residual_sd,
        adjusted_r2,
        lag1_autocorr,
        n_obs: n,
        n_params: p,
    })
}

/// Map the solution vector back onto named coefficients. Only the default
/// column layout (Sunday reference) can be expressed as a `CoefficientSet`.
fn coefficients_from_solution(design: &DesignMatrix, beta: &DVector<f64>) -> Result<CoefficientSet> {
    let name_of = |j: usize| design.column_names[j].as_str();
    if name_of(BASE_COLS) != "dow_mon" {
        return Err(Error::Contract(
            "coefficient extraction requires the default Sunday-reference layout".into(),
        ));
    }
    let mut omega = [0.0; 6];
    omega.copy_from_slice(beta.as_slice().get(BASE_COLS..BASE_COLS + 6).unwrap());
    let mut phi = BTreeMap::new();
    phi.insert(design.reference_winter, 0.0);
    for (j, name) in design.column_names.iter().enumerate() {
        if let Some(year) = name.strip_prefix("year_") {
            phi.insert(year.parse::<i32>().unwrap(), beta[j]);
        }
    }
    Ok(CoefficientSet {
        alpha: beta[0],
        lambda1: beta[1],
        beta1: beta[2],
        beta2: beta[3],
        gamma1: beta[4],
        omega,
        phi,
        reference_winter: design.reference_winter,
    })
}

/// Internal fit result for non-default reference layouts; used by tests to
/// check reference-choice invariance of the fitted values.
#[cfg(test)]
pub(crate) fn fitted_values(design: &DesignMatrix) -> Result<DVector<f64>> {
    let qr = design.x.clone().qr();
    let qty = qr.q().transpose() * &design.y;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Contract("upper-triangular solve failed".into()))?;
    Ok(&design.x * &beta)
}

/// The column most correlated with column `j`, for singularity reporting.
fn most_collinear_with(x: &DMatrix<f64>, j: usize) -> (usize, f64) {
    let n = x.nrows();
    let col_j = x.column(j);
    let mean_j = col_j.mean();
    let mut best = (0, -1.0);
    for c in 0..x.ncols() {
        if c == j {
            continue;
        }
        let col = x.column(c);
        let mean_c = col.mean();
        let mut num = 0.0;
        let mut var_j = 0.0;
        let mut var_c = 0.0;
        for i in 0..n {
            let a = col_j[i] - mean_j;
            let b = col[i] - mean_c;
            num += a * b;
            var_j += a * a;
            var_c += b * b;
        }
        let denom = (var_j * var_c).sqrt();
        // Two constant columns are perfectly collinear even though the
        // centered correlation degenerates.
        let corr = if denom == 0.0 {
            if var_j == 0.0 && var_c == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (num / denom).abs()
        };
        if corr > best.1 {
            best = (c, corr);
        }
    }
    best
}

/// Evaluate a fit's regression mean on a dataset, one value per date.
pub fn central_estimate(fit: &RegressionFit, data: &WinterDataset) -> Result<Vec<f64>> {
    central_estimate_for(&fit.coefficients, data)
}

/// Evaluate any coefficient set on a dataset, one value per date.
pub fn central_estimate_for(coeffs: &CoefficientSet, data: &WinterDataset) -> Result<Vec<f64>> {
    let cal = data.calendar();
    let te = data.te_at_peak();
    let ws = data.ws_at_peak();
    (0..cal.len())
        .map(|t| {
            coeffs.central(
                te[t],
                cal.dsn()[t] as f64,
                ws[t],
                cal.dow()[t],
                data.winter_id(),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Fit serialization
// ---------------------------------------------------------------------------

/// JSON document for a serialized fit.
#[derive(Debug, Serialize, Deserialize)]
struct FitDocument {
    coefficients: CoefficientSet,
    standard_errors: BTreeMap<String, f64>,
    residual_sd: f64,
    adjusted_r2: f64,
    lag1_autocorr: f64,
    n_obs: usize,
    n_params: usize,
    residuals: Vec<ResidualRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResidualRow {
    winter: i32,
    date: NaiveDate,
    mw: f64,
}

/// Serialize a fit to pretty-printed JSON (deterministic key order).
pub fn fit_to_json(fit: &RegressionFit) -> String {
    let doc = FitDocument {
        coefficients: fit.coefficients.clone(),
        standard_errors: fit.standard_errors.clone(),
        residual_sd: fit.residual_sd,
        adjusted_r2: fit.adjusted_r2,
        lag1_autocorr: fit.lag1_autocorr,
        n_obs: fit.n_obs,
        n_params: fit.n_params,
        residuals: fit
            .residuals
            .iter()
            .map(|(&(winter, date), &mw)| ResidualRow { winter, date, mw })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("fit serializes")
}

/// Parse a fit from JSON produced by [`fit_to_json`].
pub fn fit_from_json(text: &str, path: &str) -> Result<RegressionFit> {
    let doc: FitDocument = serde_json::from_str(text).map_err(|e| Error::Json {
        path: path.into(),
        detail: e.to_string(),
    })?;
    let mut residuals = BTreeMap::new();
    for row in doc.residuals {
        residuals.insert((row.winter, row.date), row.mw);
    }
    Ok(RegressionFit {
        coefficients: doc.coefficients,
        standard_errors: doc.standard_errors,
        residuals,
        residual_sd: doc.residual_sd,
        adjusted_r2: doc.adjusted_r2,
        lag1_autocorr: doc.lag1_autocorr,
        n_obs: doc.n_obs,
        n_params: doc.n_params,
    })
}
