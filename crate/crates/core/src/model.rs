//! Core domain types: satellite observations, epochs and measurement series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper sanity bound for C/N0 in dB-Hz. Larger values are treated as corrupt input.
pub const CN0_CEILING_DBHZ: f64 = 64.0;

/// Nominal sampling interval used when nothing else is known.
pub const DEFAULT_CADENCE_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid observation for {key}: {reason}")]
    InvalidObservation { key: SatelliteKey, reason: &'static str },
    #[error("svid must be >= 1")]
    InvalidSvid,
    #[error("unknown constellation token `{0}`")]
    UnknownConstellation(String),
    #[error("malformed satellite key `{0}`, expected CONST:SVID")]
    MalformedKey(String),
    #[error("satellite {0} appears twice in one epoch")]
    DuplicateSatellite(SatelliteKey),
    #[error("timestamp {0} is not finite")]
    NonFiniteTimestamp(f64),
    #[error("timestamps must strictly increase ({prev} then {next})")]
    NonMonotonicTime { prev: f64, next: f64 },
    #[error("cadence must be a positive finite number of seconds, got {0}")]
    InvalidCadence(f64),
}

/// GNSS constellation a satellite belongs to.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConstellationId {
    Gps,
    Glonass,
    Galileo,
    Beidou,
    Qzss,
    Sbas,
    Unknown,
}

impl ConstellationId {
    pub const ALL: [ConstellationId; 7] = [
        ConstellationId::Gps,
        ConstellationId::Glonass,
        ConstellationId::Galileo,
        ConstellationId::Beidou,
        ConstellationId::Qzss,
        ConstellationId::Sbas,
        ConstellationId::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstellationId::Gps => "GPS",
            ConstellationId::Glonass => "GLONASS",
            ConstellationId::Galileo => "GALILEO",
            ConstellationId::Beidou => "BEIDOU",
            ConstellationId::Qzss => "QZSS",
            ConstellationId::Sbas => "SBAS",
            ConstellationId::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for ConstellationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstellationId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstellationId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownConstellation(s.to_owned()))
    }
}

/// Identity of a satellite: constellation plus space-vehicle id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SatelliteKey {
    constellation: ConstellationId,
    svid: u32,
}

impl SatelliteKey {
    pub fn new(constellation: ConstellationId, svid: u32) -> Result<Self, ModelError> {
        if svid == 0 {
            return Err(ModelError::InvalidSvid);
        }
        Ok(SatelliteKey { constellation, svid })
    }

    pub fn constellation(&self) -> ConstellationId {
        self.constellation
    }

    pub fn svid(&self) -> u32 {
        self.svid
    }
}

impl fmt::Display for SatelliteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.constellation, self.svid)
    }
}

impl FromStr for SatelliteKey {
    type Err = ModelError;

    /// Parses `CONST:SVID`, e.g. `GPS:12`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, n) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| ModelError::MalformedKey(s.to_owned()))?;
        let svid = n
            .trim()
            .parse::<u32>()
            .map_err(|_| ModelError::MalformedKey(s.to_owned()))?;
        SatelliteKey::new(c.trim().parse()?, svid)
    }
}

impl Serialize for SatelliteKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SatelliteKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One satellite's raw status at one epoch.
///
/// `signal_present` and `used_in_fix` are stored independently of the C/N0
/// value. Unacquired satellites may still carry predicted azimuth/elevation;
/// those angles are never consumed by any statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteObservation {
    pub key: SatelliteKey,
    pub cn0_dbhz: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub signal_present: bool,
    pub used_in_fix: bool,
    pub has_almanac: bool,
    pub has_ephemeris: bool,
}

impl SatelliteObservation {
    /// A tracked satellite (signal present, not used in a fix).
    pub fn tracked(key: SatelliteKey, cn0_dbhz: f64, azimuth_deg: f64, elevation_deg: f64) -> Self {
        SatelliteObservation {
            key,
            cn0_dbhz,
            azimuth_deg,
            elevation_deg,
            signal_present: true,
            used_in_fix: false,
            has_almanac: false,
            has_ephemeris: false,
        }
    }

    /// A predicted but unacquired satellite.
    pub fn untracked(key: SatelliteKey, azimuth_deg: f64, elevation_deg: f64) -> Self {
        SatelliteObservation {
            signal_present: false,
            cn0_dbhz: 0.0,
            ..SatelliteObservation::tracked(key, 0.0, azimuth_deg, elevation_deg)
        }
    }

    pub fn with_fix(mut self, used_in_fix: bool) -> Self {
        self.used_in_fix = used_in_fix;
        self
    }

    pub fn with_nav_data(mut self, has_almanac: bool, has_ephemeris: bool) -> Self {
        self.has_almanac = has_almanac;
        self.has_ephemeris = has_ephemeris;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason| Err(ModelError::InvalidObservation { key: self.key, reason });
        if !(0.0..=CN0_CEILING_DBHZ).contains(&self.cn0_dbhz) {
            return fail("cn0 outside [0, 64] dB-Hz");
        }
        if !(0.0..360.0).contains(&self.azimuth_deg) {
            return fail("azimuth outside [0, 360)");
        }
        if !(-90.0..=90.0).contains(&self.elevation_deg) {
            return fail("elevation outside [-90, 90]");
        }
        if self.used_in_fix && !self.signal_present {
            return fail("used in fix without a signal");
        }
        if !self.signal_present && self.cn0_dbhz != 0.0 {
            return fail("non-zero cn0 without a signal");
        }
        Ok(())
    }
}

/// All observations sharing one timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    timestamp_s: f64,
    observations: Vec<SatelliteObservation>,
}

impl Epoch {
    /// Validates every observation and stores them sorted by satellite key,
    /// so two epochs with the same content compare equal regardless of input order.
    pub fn new(
        timestamp_s: f64,
        mut observations: Vec<SatelliteObservation>,
    ) -> Result<Self, ModelError> {
        if !timestamp_s.is_finite() {
            return Err(ModelError::NonFiniteTimestamp(timestamp_s));
        }
        for obs in &observations {
            obs.validate()?;
        }
        observations.sort_by_key(|o| o.key);
        if let Some(pair) = observations.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(ModelError::DuplicateSatellite(pair[0].key));
        }
        Ok(Epoch { timestamp_s, observations })
    }

    pub fn empty(timestamp_s: f64) -> Result<Self, ModelError> {
        Epoch::new(timestamp_s, Vec::new())
    }

    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_s
    }

    pub fn observations(&self) -> &[SatelliteObservation] {
        &self.observations
    }

    /// Observations with a signal present.
    pub fn present(&self) -> impl Iterator<Item = &SatelliteObservation> {
        self.observations.iter().filter(|o| o.signal_present)
    }

    /// Number of satellites with a signal available (S_i).
    pub fn satellite_count(&self) -> usize {
        self.present().count()
    }

    /// Number of satellites used in the fix (X_i).
    pub fn fix_count(&self) -> usize {
        self.observations.iter().filter(|o| o.used_in_fix).count()
    }

    /// Highest C/N0 among satellites with a signal, `None` when none is present.
    pub fn max_cn0(&self) -> Option<f64> {
        self.present().map(|o| o.cn0_dbhz).reduce(f64::max)
    }
}

/// Ordered measurement record: epochs with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    epochs: Vec<Epoch>,
    cadence_s: f64,
}

impl RawSeries {
    pub fn new(epochs: Vec<Epoch>, cadence_s: f64) -> Result<Self, ModelError> {
        if !(cadence_s.is_finite() && cadence_s > 0.0) {
            return Err(ModelError::InvalidCadence(cadence_s));
        }
        for pair in epochs.windows(2) {
            let (prev, next) = (pair[0].timestamp_s, pair[1].timestamp_s);
            if next <= prev {
                return Err(ModelError::NonMonotonicTime { prev, next });
            }
        }
        Ok(RawSeries { epochs, cadence_s })
    }

    pub fn empty() -> Self {
        RawSeries { epochs: Vec::new(), cadence_s: DEFAULT_CADENCE_S }
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn into_epochs(self) -> Vec<Epoch> {
        self.epochs
    }

    pub fn cadence_s(&self) -> f64 {
        self.cadence_s
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// Timestamp of the first epoch; windows and TTFF are measured from here.
    pub fn start_s(&self) -> Option<f64> {
        self.epochs.first().map(Epoch::timestamp_s)
    }

    /// Covered duration: last minus first timestamp plus one cadence interval,
    /// so `n` epochs at 1 s spacing span `n` seconds.
    pub fn span_s(&self) -> f64 {
        match (self.epochs.first(), self.epochs.last()) {
            (Some(a), Some(b)) => b.timestamp_s - a.timestamp_s + self.cadence_s,
            _ => 0.0,
        }
    }

    /// Epochs paired with their time relative to the first epoch.
    pub fn relative(&self) -> impl Iterator<Item = (f64, &Epoch)> {
        let start = self.start_s().unwrap_or(0.0);
        self.epochs.iter().map(move |e| (e.timestamp_s - start, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(svid: u32) -> SatelliteKey {
        SatelliteKey::new(ConstellationId::Gps, svid).unwrap()
    }

    #[test]
    fn constellation_tokens_round_trip() {
        for c in ConstellationId::ALL {
            assert_eq!(c.to_string().parse::<ConstellationId>().unwrap(), c);
        }
        assert!("GALILEIO".parse::<ConstellationId>().is_err());
    }

    #[test]
    fn key_parsing() {
        let k: SatelliteKey = "GLONASS:7".parse().unwrap();
        assert_eq!(k.constellation(), ConstellationId::Glonass);
        assert_eq!(k.svid(), 7);
        assert_eq!(k.to_string(), "GLONASS:7");
        assert_eq!("GPS:0".parse::<SatelliteKey>(), Err(ModelError::InvalidSvid));
        assert!("GPS".parse::<SatelliteKey>().is_err());
    }

    #[test]
    fn empty_epoch_counts() {
        let e = Epoch::empty(0.0).unwrap();
        assert_eq!(e.satellite_count(), 0);
        assert_eq!(e.fix_count(), 0);
        assert_eq!(e.max_cn0(), None);
    }

    #[test]
    fn counts_follow_flags() {
        let e = Epoch::new(
            1.0,
            vec![
                SatelliteObservation::tracked(key(1), 20.0, 10.0, 40.0),
                SatelliteObservation::tracked(key(2), 25.0, 20.0, 40.0),
                SatelliteObservation::untracked(key(3), 30.0, 5.0),
            ],
        )
        .unwrap();
        assert_eq!(e.satellite_count(), 2);
        assert_eq!(e.fix_count(), 0);

        let obs = (1..=7)
            .map(|s| SatelliteObservation::tracked(key(s), 30.0, 0.0, 45.0).with_fix(s <= 5))
            .collect();
        let e = Epoch::new(2.0, obs).unwrap();
        assert_eq!(e.satellite_count(), 7);
        assert_eq!(e.fix_count(), 5);
    }

    #[test]
    fn max_cn0_of_present_satellites() {
        let obs = [17.0, 22.5, 28.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| SatelliteObservation::tracked(key(i as u32 + 1), c, 0.0, 30.0))
            .collect();
        assert_eq!(Epoch::new(0.0, obs).unwrap().max_cn0(), Some(28.0));
    }

    #[test]
    fn observation_invariants_enforced() {
        let bad = [
            SatelliteObservation::tracked(key(1), 64.5, 0.0, 0.0),
            SatelliteObservation::tracked(key(1), -1.0, 0.0, 0.0),
            SatelliteObservation::tracked(key(1), 30.0, 360.0, 0.0),
            SatelliteObservation::tracked(key(1), 30.0, 0.0, 91.0),
            SatelliteObservation::untracked(key(1), 0.0, 0.0).with_fix(true),
            SatelliteObservation { cn0_dbhz: 3.0, ..SatelliteObservation::untracked(key(1), 0.0, 0.0) },
        ];
        for obs in bad {
            assert!(Epoch::new(0.0, vec![obs]).is_err(), "{obs:?}");
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let o = SatelliteObservation::tracked(key(4), 30.0, 0.0, 45.0);
        assert_eq!(Epoch::new(0.0, vec![o, o]), Err(ModelError::DuplicateSatellite(key(4))));
        // same svid, different constellation is fine
        let other = SatelliteObservation {
            key: SatelliteKey::new(ConstellationId::Glonass, 4).unwrap(),
            ..o
        };
        assert!(Epoch::new(0.0, vec![o, other]).is_ok());
    }

    #[test]
    fn series_invariants() {
        let e0 = Epoch::empty(0.0).unwrap();
        let e1 = Epoch::empty(1.0).unwrap();
        assert!(RawSeries::new(vec![e0.clone(), e1.clone()], 1.0).is_ok());
        assert!(RawSeries::new(vec![e1.clone(), e0.clone()], 1.0).is_err());
        assert!(RawSeries::new(vec![e0.clone(), e0.clone()], 1.0).is_err());
        assert!(RawSeries::new(vec![e0], 0.0).is_err());
        let s = RawSeries::new(vec![Epoch::empty(5.0).unwrap(), Epoch::empty(6.0).unwrap()], 1.0)
            .unwrap();
        assert_eq!(s.span_s(), 2.0);
        assert_eq!(s.relative().map(|(t, _)| t).collect::<Vec<_>>(), vec![0.0, 1.0]);
    }
}
