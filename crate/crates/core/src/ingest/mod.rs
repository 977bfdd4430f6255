//! Readers and writers for GNSS status logs.
//!
//! GAD-CSV is the canonical on-disk format; NMEA-0183 streams can be read
//! and converted into it.

mod gadcsv;
mod nmea;

use std::fmt;

use thiserror::Error;

use crate::model::{RawSeries, SatelliteKey};

pub use gadcsv::{parse_gad_csv, parse_gad_csv_with_cadence, write_gad_csv, GadCsvRecord, GadCsvStream, GAD_CSV_HEADER};
pub use nmea::{nmea_checksum, parse_nmea, parse_nmea_with_cadence};

/// A line that was skipped or only partially used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineWarning {
    pub line: usize,
    pub reason: String,
}

impl LineWarning {
    pub(crate) fn new(line: usize, reason: impl Into<String>) -> Self {
        LineWarning { line, reason: reason.into() }
    }
}

impl fmt::Display for LineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub series: RawSeries,
    /// Non-blank lines seen, excluding a GAD-CSV header.
    pub lines_total: usize,
    pub lines_skipped: usize,
    pub warnings: Vec<LineWarning>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("no valid records ({} warnings)", warnings.len())]
    EmptyInput { warnings: Vec<LineWarning> },
    #[error("line {line}: time goes backwards ({prev} s then {next} s)")]
    NonMonotonicTime { line: usize, prev: f64, next: f64 },
    #[error("line {line}: satellite {key} appears twice in one epoch")]
    DuplicateSatellite { line: usize, key: SatelliteKey },
    #[error("cadence must be a positive finite number of seconds, got {0}")]
    InvalidCadence(f64),
}

pub(crate) fn check_cadence(cadence_s: f64) -> Result<(), IngestError> {
    if cadence_s.is_finite() && cadence_s > 0.0 {
        Ok(())
    } else {
        Err(IngestError::InvalidCadence(cadence_s))
    }
}
