//! Resource adequacy for winter-peaking power systems under weather shifts.
//!
//! The pipeline: ingest hourly demand and weather ([`ingest`]), derive
//! effective temperature and wind power ([`weather`]), fit the daily-peak
//! demand regression ([`demand`]), map history into supply/demand scenarios
//! and re-align dates ([`scenario`]), and convolve the generation fleet into
//! loss-of-load risk ([`adequacy`]).

pub mod adequacy;
pub mod cli;
pub mod demand;
pub mod error;
pub mod ingest;
pub mod scenario;
pub mod weather;

pub use error::{Error, Result};
