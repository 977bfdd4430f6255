//! NMEA-0183 reader.
//!
//! GSV groups supply the satellites in view, GSA the satellites used in the
//! fix, and GGA/RMC the time of the cycle. A cycle is closed when a time
//! sentence with a new time arrives, or when a GSV group restarts for a
//! talker (and signal) already seen in the open cycle.

use std::collections::{BTreeMap, HashSet};

use super::{check_cadence, IngestError, LineWarning, ParseReport};
use crate::model::{
    ConstellationId, Epoch, RawSeries, SatelliteKey, SatelliteObservation, CN0_CEILING_DBHZ,
    DEFAULT_CADENCE_S,
};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// XOR of all bytes of a sentence payload (between `$` and `*`).
pub fn nmea_checksum(payload: &str) -> u8 {
    payload.bytes().fold(0, |acc, b| acc ^ b)
}

fn talker_constellation(talker: &str) -> ConstellationId {
    match talker {
        "GP" => ConstellationId::Gps,
        "GL" => ConstellationId::Glonass,
        "GA" => ConstellationId::Galileo,
        "GB" | "BD" => ConstellationId::Beidou,
        "GQ" => ConstellationId::Qzss,
        _ => ConstellationId::Unknown,
    }
}

/// NMEA 4.10 GNSS system id carried by GSA.
fn system_constellation(id: &str) -> Option<ConstellationId> {
    match id.trim() {
        "1" => Some(ConstellationId::Gps),
        "2" => Some(ConstellationId::Glonass),
        "3" => Some(ConstellationId::Galileo),
        "4" => Some(ConstellationId::Beidou),
        "5" => Some(ConstellationId::Qzss),
        _ => None,
    }
}

/// Splits `$ADDR,f1,...*HH` into its fields after verifying the checksum.
fn checked_fields(line: &str) -> Result<Vec<&str>, String> {
    let body = line
        .strip_prefix('$')
        .or_else(|| line.strip_prefix('!'))
        .ok_or("missing `$` start")?;
    let (payload, tail) = body.rsplit_once('*').ok_or("missing checksum")?;
    let expected = tail
        .get(..2)
        .filter(|h| tail.len() == 2 && h.bytes().all(|b| b.is_ascii_hexdigit()))
        .and_then(|h| u8::from_str_radix(h, 16).ok())
        .ok_or("malformed checksum")?;
    let actual = nmea_checksum(payload);
    if actual != expected {
        return Err(format!("checksum mismatch: computed {actual:02X}, sentence says {expected:02X}"));
    }
    Ok(payload.split(',').collect())
}

fn parse_time_of_day(field: &str) -> Option<f64> {
    if field.len() < 6 || !field.is_ascii() {
        return None;
    }
    let hh: u32 = field[0..2].parse().ok()?;
    let mm: u32 = field[2..4].parse().ok()?;
    let ss: f64 = field[4..].parse().ok()?;
    if hh > 23 || mm > 59 || !(0.0..61.0).contains(&ss) {
        return None;
    }
    Some(f64::from(hh * 3600 + mm * 60) + ss)
}

fn opt_number(field: &str) -> Result<Option<f64>, String> {
    if field.trim().is_empty() {
        return Ok(None);
    }
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("bad numeric field `{field}`")),
    }
}

struct FixRef {
    constellation: Option<ConstellationId>,
    svid: u32,
    line: usize,
}

#[derive(Default)]
struct Cycle {
    time_of_day: Option<f64>,
    has_gsv: bool,
    gsv_groups: HashSet<(String, String)>,
    observations: BTreeMap<SatelliteKey, SatelliteObservation>,
    fix_refs: Vec<FixRef>,
}

struct Assembler {
    cadence_s: f64,
    cycle: Cycle,
    epochs: Vec<Epoch>,
    warnings: Vec<LineWarning>,
    last_time_of_day: Option<f64>,
    day_offset: f64,
    /// absolute time mapped to t = 0
    base: Option<f64>,
}

impl Assembler {
    fn new(cadence_s: f64) -> Self {
        Assembler {
            cadence_s,
            cycle: Cycle::default(),
            epochs: Vec::new(),
            warnings: Vec::new(),
            last_time_of_day: None,
            day_offset: 0.0,
            base: None,
        }
    }

    fn time_sentence(&mut self, tod: f64, line: usize) -> Result<(), IngestError> {
        match self.cycle.time_of_day {
            Some(current) if current != tod => {
                if self.cycle.has_gsv {
                    self.flush(line)?;
                } else {
                    self.cycle = Cycle::default();
                }
                self.cycle.time_of_day = Some(tod);
            }
            Some(_) => {}
            None => self.cycle.time_of_day = Some(tod),
        }
        Ok(())
    }

    fn gsv(&mut self, talker: &str, fields: &[&str], line: usize) -> Result<(), IngestError> {
        if fields.len() < 4 {
            self.warnings.push(LineWarning::new(line, "GSV too short"));
            return Ok(());
        }
        let msg_num = fields[2].trim().parse::<u32>().unwrap_or(0);
        // NMEA 4.10 appends a signal id, making the satellite block length odd
        let sats = &fields[4..];
        let (blocks, signal) = if sats.len() % 4 == 1 {
            (&sats[..sats.len() - 1], sats[sats.len() - 1])
        } else {
            (sats, "")
        };
        let group = (talker.to_owned(), signal.to_owned());
        if msg_num == 1 && self.cycle.gsv_groups.contains(&group) {
            self.flush(line)?;
        }
        self.cycle.gsv_groups.insert(group);
        self.cycle.has_gsv = true;

        let constellation = talker_constellation(talker);
        for block in blocks.chunks(4) {
            if block.iter().all(|f| f.trim().is_empty()) {
                continue;
            }
            match self.gsv_satellite(constellation, block) {
                Ok(obs) => {
                    let slot = self.cycle.observations.entry(obs.key).or_insert(obs);
                    // several signals of one satellite: keep the strongest
                    if obs.cn0_dbhz > slot.cn0_dbhz {
                        *slot = obs;
                    }
                }
                Err(reason) => self.warnings.push(LineWarning::new(line, reason)),
            }
        }
        Ok(())
    }

    fn gsv_satellite(
        &self,
        constellation: ConstellationId,
        block: &[&str],
    ) -> Result<SatelliteObservation, String> {
        let field = |i: usize| block.get(i).copied().unwrap_or("");
        let svid = field(0)
            .trim()
            .parse::<u32>()
            .map_err(|_| format!("bad svid `{}`", field(0)))?;
        let key = SatelliteKey::new(constellation, svid).map_err(|e| e.to_string())?;
        let elevation = opt_number(field(1))?.unwrap_or(0.0);
        let azimuth = opt_number(field(2))?.unwrap_or(0.0);
        let azimuth = if azimuth == 360.0 { 0.0 } else { azimuth };
        let obs = match opt_number(field(3))? {
            // blank or zero SNR: predicted but not tracked
            None | Some(0.0) => SatelliteObservation::untracked(key, azimuth, elevation),
            Some(snr) if snr > CN0_CEILING_DBHZ => {
                return Err(format!("{key}: SNR {snr} above {CN0_CEILING_DBHZ} dB-Hz"));
            }
            Some(snr) => SatelliteObservation::tracked(key, snr, azimuth, elevation),
        };
        obs.validate().map_err(|e| e.to_string())?;
        Ok(obs)
    }

    fn gsa(&mut self, talker: &str, fields: &[&str], line: usize) {
        if fields.len() < 15 {
            self.warnings.push(LineWarning::new(line, "GSA too short"));
            return;
        }
        if fields[2].trim() == "1" {
            // no fix
            return;
        }
        let constellation = fields
            .get(18)
            .and_then(|id| system_constellation(id))
            .or(match talker_constellation(talker) {
                ConstellationId::Unknown => None,
                c => Some(c),
            });
        for f in &fields[3..15] {
            if f.trim().is_empty() {
                continue;
            }
            match f.trim().parse::<u32>() {
                Ok(svid) if svid > 0 => {
                    self.cycle.fix_refs.push(FixRef { constellation, svid, line })
                }
                _ => self.warnings.push(LineWarning::new(line, format!("bad GSA svid `{f}`"))),
            }
        }
    }

    fn flush(&mut self, line: usize) -> Result<(), IngestError> {
        let cycle = std::mem::take(&mut self.cycle);
        if !cycle.has_gsv {
            return Ok(());
        }
        let mut observations = cycle.observations;
        for r in &cycle.fix_refs {
            let mut matched = false;
            for (key, obs) in observations.iter_mut() {
                if key.svid() != r.svid || r.constellation.is_some_and(|c| c != key.constellation()) {
                    continue;
                }
                matched = true;
                if obs.signal_present {
                    obs.used_in_fix = true;
                } else {
                    self.warnings.push(LineWarning::new(
                        r.line,
                        format!("{key} listed in fix but has no signal; ignored"),
                    ));
                }
            }
            if !matched {
                self.warnings.push(LineWarning::new(
                    r.line,
                    format!("svid {} listed in fix but not in view", r.svid),
                ));
            }
        }

        let previous = self.epochs.last().map(Epoch::timestamp_s);
        let next_synthetic = previous.map_or(0.0, |p| p + self.cadence_s);
        let t = match cycle.time_of_day {
            Some(tod) => {
                if self.last_time_of_day.is_some_and(|last| tod < last - SECONDS_PER_DAY / 2.0) {
                    self.day_offset += SECONDS_PER_DAY;
                }
                self.last_time_of_day = Some(tod);
                let absolute = tod + self.day_offset;
                let base = *self.base.get_or_insert(absolute - next_synthetic);
                absolute - base
            }
            None => next_synthetic,
        };
        if let Some(prev) = previous {
            if t <= prev {
                return Err(IngestError::NonMonotonicTime { line, prev, next: t });
            }
        }
        let epoch = Epoch::new(t, observations.into_values().collect())
            .expect("observations are validated and keyed uniquely");
        self.epochs.push(epoch);
        Ok(())
    }
}

/// Parses an NMEA-0183 stream with the default 1 s cadence.
pub fn parse_nmea(text: &str) -> Result<ParseReport, IngestError> {
    parse_nmea_with_cadence(text, DEFAULT_CADENCE_S)
}

/// `cadence_s` spaces epochs of streams that carry no GGA/RMC time.
pub fn parse_nmea_with_cadence(text: &str, cadence_s: f64) -> Result<ParseReport, IngestError> {
    check_cadence(cadence_s)?;
    let mut asm = Assembler::new(cadence_s);
    let mut lines_total = 0;
    let mut lines_skipped = 0;
    let mut line_no = 0;

    for (i, raw) in text.lines().enumerate() {
        line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        lines_total += 1;
        let fields = match checked_fields(line) {
            Ok(f) => f,
            Err(reason) => {
                lines_skipped += 1;
                asm.warnings.push(LineWarning::new(line_no, reason));
                continue;
            }
        };
        let address = fields[0];
        if address.len() != 5 || !address.is_ascii() {
            // proprietary and unusual sentences carry nothing we read
            continue;
        }
        let (talker, kind) = address.split_at(2);
        match kind {
            "GGA" | "RMC" => match fields.get(1).and_then(|f| parse_time_of_day(f)) {
                Some(tod) => asm.time_sentence(tod, line_no)?,
                None => {
                    if fields.get(1).is_some_and(|f| !f.is_empty()) {
                        lines_skipped += 1;
                        asm.warnings.push(LineWarning::new(line_no, "bad UTC time"));
                    }
                }
            },
            "GSV" => asm.gsv(talker, &fields, line_no)?,
            "GSA" => asm.gsa(talker, &fields, line_no),
            _ => {}
        }
    }
    asm.flush(line_no + 1)?;

    if asm.epochs.is_empty() {
        return Err(IngestError::EmptyInput { warnings: asm.warnings });
    }
    let series = RawSeries::new(asm.epochs, cadence_s).expect("epochs strictly increase");
    Ok(ParseReport { series, lines_total, lines_skipped, warnings: asm.warnings })
}
