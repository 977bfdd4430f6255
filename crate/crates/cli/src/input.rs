use std::fs;
use std::io::Read;
use std::path::Path;

use clap::ValueEnum;
use gad_core::ingest::{parse_gad_csv_with_cadence, parse_nmea_with_cadence};
use gad_core::{ParseReport, RawSeries};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Nmea,
    Gadcsv,
}

impl Format {
    /// NMEA when the first non-blank line starts a sentence.
    fn sniff(text: &str) -> Format {
        match text.lines().map(str::trim).find(|l| !l.is_empty()) {
            Some(l) if l.starts_with('$') || l.starts_with('!') => Format::Nmea,
            _ => Format::Gadcsv,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    let bytes = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).map_err(|e| CliError::io(path, e))?;
        buf
    } else {
        fs::read(path).map_err(|e| CliError::io(path, e))?
    };
    String::from_utf8(bytes).map_err(|e| CliError::parse(path, e))
}

pub fn parse_text(
    path: &Path,
    text: &str,
    format: Option<Format>,
    cadence_s: f64,
) -> Result<ParseReport, CliError> {
    let report = match format.unwrap_or_else(|| Format::sniff(text)) {
        Format::Nmea => parse_nmea_with_cadence(text, cadence_s),
        Format::Gadcsv => parse_gad_csv_with_cadence(text, cadence_s),
    };
    let report = report.map_err(|e| match CliError::from(e) {
        CliError::Parse(m) => CliError::parse(path, m),
        other => other,
    })?;
    summarize(path, &report);
    Ok(report)
}

/// Reads and parses one recording, reporting skipped lines on stderr.
pub fn load(path: &Path, format: Option<Format>, cadence_s: f64) -> Result<RawSeries, CliError> {
    let text = read_text(path)?;
    Ok(parse_text(path, &text, format, cadence_s)?.series)
}

pub fn summarize(path: &Path, report: &ParseReport) {
    if report.lines_skipped == 0 {
        return;
    }
    eprintln!(
        "{}: skipped {} of {} lines",
        path.display(),
        report.lines_skipped,
        report.lines_total
    );
    for w in report.warnings.iter().take(20) {
        eprintln!("  {w}");
    }
    if report.warnings.len() > 20 {
        eprintln!("  ... {} more", report.warnings.len() - 20);
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if path == Path::new("-") {
        print!("{contents}");
        Ok(())
    } else {
        fs::write(path, contents).map_err(|e| CliError::io(path, e))
    }
}
