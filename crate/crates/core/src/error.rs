//! Error type shared across the crate.
//!
//! Errors fall into two families that map onto the CLI exit codes:
//! input errors (bad files, bad values, bad ranges — exit code 2) and
//! numerical-contract errors (singular fits, failed calibrations, shift
//! bounds, mode mismatches — exit code 3).

use thiserror::Error;

/// Any error produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// I/O failure while reading or writing a file.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A cell of a CSV file failed to parse.
    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as {expected}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        value: String,
        expected: &'static str,
    },

    /// An hourly series is missing one or more timestamps.
    #[error("{path}: missing hour {timestamp}")]
    Gap { path: String, timestamp: String },

    /// Two series that must cover the same dates do not.
    #[error("misaligned date ranges: {detail}")]
    Alignment { detail: String },

    /// A value violates a documented invariant of its type.
    #[error("invalid {what}: {detail}")]
    Validation { what: &'static str, detail: String },

    /// Malformed JSON input.
    #[error("{path}: {detail}")]
    Json { path: String, detail: String },

    /// The design matrix is rank deficient.
    #[error("design matrix is singular: column {col_a:?} is collinear with column {col_b:?}")]
    Singular { col_a: String, col_b: String },

    /// A requested shift exceeds the weather padding around the winter window.
    #[error(
        "shift tau={tau} out of bounds: weather padding covers {available_lo}..{available_hi} days"
    )]
    ShiftBounds {
        tau: i32,
        available_lo: i64,
        available_hi: i64,
    },

    /// A residual mode was paired with the wrong capacity distribution.
    #[error("mode mismatch: {detail}")]
    ModeMismatch { detail: String },

    /// Bisection could not reach the requested risk target.
    #[error(
        "calibration cannot reach target {target}: achievable range is [{achieved_lo}, {achieved_hi}]"
    )]
    Calibration {
        target: f64,
        achieved_lo: f64,
        achieved_hi: f64,
    },

    /// A numerical-contract violation not covered by a more specific variant.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for input errors, 3 for
    /// numerical-contract errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Gap { .. }
            | Error::Alignment { .. }
            | Error::Validation { .. }
            | Error::Json { .. } => 2,
            Error::Singular { .. }
            | Error::ShiftBounds { .. }
            | Error::ModeMismatch { .. }
            | Error::Calibration { .. }
            | Error::Contract(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
