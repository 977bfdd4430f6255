//! GAD-CSV: one line per satellite observation.
//!
//! ```text
//! t_s,constellation,svid,cn0_dbhz,az_deg,el_deg,rho,chi,alm,eph
//! 12.000,GPS,5,38.5,123.4,45.0,1,1,1,1
//! ```
//!
//! Times carry three fractional digits, angles and C/N0 one. Records whose
//! timestamps lie within half a cadence of each other form one epoch.

use std::fmt::Write as _;
use std::mem;

use super::{check_cadence, IngestError, LineWarning, ParseReport};
use crate::model::{
    ConstellationId, Epoch, RawSeries, SatelliteKey, SatelliteObservation, DEFAULT_CADENCE_S,
};

pub const GAD_CSV_HEADER: &str = "t_s,constellation,svid,cn0_dbhz,az_deg,el_deg,rho,chi,alm,eph";

/// One parsed GAD-CSV line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadCsvRecord {
    pub t_s: f64,
    pub observation: SatelliteObservation,
}

impl GadCsvRecord {
    pub fn parse(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(format!("expected 10 fields, found {}", fields.len()));
        }
        let t_s = finite(fields[0], "t_s")?;
        let constellation: ConstellationId = fields[1].parse().map_err(|e| format!("{e}"))?;
        let svid = fields[2]
            .parse::<u32>()
            .map_err(|_| format!("bad svid `{}`", fields[2]))?;
        let key = SatelliteKey::new(constellation, svid).map_err(|e| e.to_string())?;
        let observation = SatelliteObservation {
            key,
            cn0_dbhz: finite(fields[3], "cn0_dbhz")?,
            azimuth_deg: finite(fields[4], "az_deg")?,
            elevation_deg: finite(fields[5], "el_deg")?,
            signal_present: flag(fields[6], "rho")?,
            used_in_fix: flag(fields[7], "chi")?,
            has_almanac: flag(fields[8], "alm")?,
            has_ephemeris: flag(fields[9], "eph")?,
        };
        observation.validate().map_err(|e| e.to_string())?;
        Ok(GadCsvRecord { t_s, observation })
    }

    fn write_to(&self, out: &mut String) {
        let o = &self.observation;
        let az = match fixed(o.azimuth_deg, 1) {
            s if s == "360.0" => "0.0".to_owned(),
            s => s,
        };
        // write! into a String cannot fail
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fixed(self.t_s, 3),
            o.key.constellation(),
            o.key.svid(),
            fixed(o.cn0_dbhz, 1),
            az,
            fixed(o.elevation_deg, 1),
            u8::from(o.signal_present),
            u8::from(o.used_in_fix),
            u8::from(o.has_almanac),
            u8::from(o.has_ephemeris),
        );
    }
}

fn finite(field: &str, name: &str) -> Result<f64, String> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("bad {name} `{field}`")),
    }
}

fn flag(field: &str, name: &str) -> Result<bool, String> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("{name} must be 0 or 1, found `{field}`")),
    }
}

fn fixed(value: f64, digits: usize) -> String {
    let s = format!("{value:.digits$}");
    // never emit negative zero
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_owned()
    } else {
        s
    }
}

struct PendingEpoch {
    t_s: f64,
    observations: Vec<SatelliteObservation>,
}

/// Incremental GAD-CSV reader.
///
/// Lines are pushed one at a time; an epoch is returned as soon as a record
/// of a later epoch arrives, and the last one by [`GadCsvStream::finish`].
pub struct GadCsvStream {
    cadence_s: f64,
    line_no: usize,
    lines_total: usize,
    lines_skipped: usize,
    warnings: Vec<LineWarning>,
    pending: Option<PendingEpoch>,
    last_emitted: Option<f64>,
}

impl GadCsvStream {
    pub fn new(cadence_s: f64) -> Result<Self, IngestError> {
        check_cadence(cadence_s)?;
        Ok(GadCsvStream {
            cadence_s,
            line_no: 0,
            lines_total: 0,
            lines_skipped: 0,
            warnings: Vec::new(),
            pending: None,
            last_emitted: None,
        })
    }

    pub fn push_line(&mut self, line: &str) -> Result<Option<Epoch>, IngestError> {
        self.line_no += 1;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || (self.line_no == 1 && line.trim() == GAD_CSV_HEADER) {
            return Ok(None);
        }
        self.lines_total += 1;
        match GadCsvRecord::parse(line.trim()) {
            Ok(record) => self.push_record(record),
            Err(reason) => {
                self.lines_skipped += 1;
                self.warnings.push(LineWarning::new(self.line_no, reason));
                Ok(None)
            }
        }
    }

    fn push_record(&mut self, record: GadCsvRecord) -> Result<Option<Epoch>, IngestError> {
        let half = self.cadence_s / 2.0;
        let line = self.line_no;
        let Some(pending) = self.pending.as_mut() else {
            self.pending = Some(PendingEpoch { t_s: record.t_s, observations: vec![record.observation] });
            return Ok(None);
        };
        if record.t_s > pending.t_s && record.t_s >= pending.t_s + half {
            let done = mem::replace(
                pending,
                PendingEpoch { t_s: record.t_s, observations: vec![record.observation] },
            );
            return self.seal(done).map(Some);
        }
        if record.t_s <= pending.t_s - half
            || self.last_emitted.is_some_and(|prev| record.t_s <= prev)
        {
            return Err(IngestError::NonMonotonicTime { line, prev: pending.t_s, next: record.t_s });
        }
        let key = record.observation.key;
        if pending.observations.iter().any(|o| o.key == key) {
            return Err(IngestError::DuplicateSatellite { line, key });
        }
        pending.t_s = pending.t_s.min(record.t_s);
        pending.observations.push(record.observation);
        Ok(None)
    }

    fn seal(&mut self, pending: PendingEpoch) -> Result<Epoch, IngestError> {
        self.last_emitted = Some(pending.t_s);
        Ok(Epoch::new(pending.t_s, pending.observations)
            .expect("records are validated and de-duplicated on the way in"))
    }

    /// Returns the final epoch, if any record is still pending.
    pub fn finish(&mut self) -> Result<Option<Epoch>, IngestError> {
        self.pending.take().map(|p| self.seal(p)).transpose()
    }

    pub fn cadence_s(&self) -> f64 {
        self.cadence_s
    }

    pub fn lines_total(&self) -> usize {
        self.lines_total
    }

    pub fn lines_skipped(&self) -> usize {
        self.lines_skipped
    }

    pub fn warnings(&self) -> &[LineWarning] {
        &self.warnings
    }

    pub fn into_report(self, epochs: Vec<Epoch>) -> Result<ParseReport, IngestError> {
        if epochs.is_empty() {
            return Err(IngestError::EmptyInput { warnings: self.warnings });
        }
        let series = RawSeries::new(epochs, self.cadence_s)
            .expect("stream emits strictly increasing epochs");
        Ok(ParseReport {
            series,
            lines_total: self.lines_total,
            lines_skipped: self.lines_skipped,
            warnings: self.warnings,
        })
    }
}

/// Parses GAD-CSV text with the default 1 s cadence.
pub fn parse_gad_csv(text: &str) -> Result<ParseReport, IngestError> {
    parse_gad_csv_with_cadence(text, DEFAULT_CADENCE_S)
}

pub fn parse_gad_csv_with_cadence(text: &str, cadence_s: f64) -> Result<ParseReport, IngestError> {
    let mut stream = GadCsvStream::new(cadence_s)?;
    let mut epochs = Vec::new();
    for line in text.lines() {
        epochs.extend(stream.push_line(line)?);
    }
    epochs.extend(stream.finish()?);
    stream.into_report(epochs)
}

/// Serializes a series as GAD-CSV. Output depends only on the series content.
pub fn write_gad_csv(series: &RawSeries) -> String {
    let mut out = String::with_capacity(64 * (1 + series.len() * 8));
    out.push_str(GAD_CSV_HEADER);
    out.push('\n');
    for epoch in series.epochs() {
        // epochs keep observations sorted by (constellation, svid)
        for &observation in epoch.observations() {
            GadCsvRecord { t_s: epoch.timestamp_s(), observation }.write_to(&mut out);
        }
    }
    out
}
