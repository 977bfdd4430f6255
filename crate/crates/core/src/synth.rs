//! Seeded generator for labeled synthetic GNSS status logs.
//!
//! Geometry is deliberately simple: every satellite moves linearly in
//! elevation and azimuth over the scenario. The channel turns elevation into
//! C/N0, removes a uniform environment attenuation, masks part of the sky and
//! adds bounded Gaussian jitter. A receiver model then decides which
//! satellites are acquired and which take part in a fix.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ConstellationId, Epoch, RawSeries, SatelliteKey, SatelliteObservation, CN0_CEILING_DBHZ,
};

/// Extra loss for satellites behind the masked part of the sky.
pub const MASK_PENALTY_DB: f64 = 30.0;
/// Jitter is clipped to this many standard deviations.
pub const NOISE_CLIP_SIGMAS: f64 = 4.0;
const MIN_CURVE_ELEVATION_DEG: f64 = 5.0;
const MAX_EPOCHS: f64 = 10_000_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario: {0}")]
pub struct SynthError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatTrack {
    pub key: SatelliteKey,
    pub elevation_start_deg: f64,
    pub elevation_end_deg: f64,
    pub azimuth_start_deg: f64,
    pub azimuth_end_deg: f64,
}

impl SatTrack {
    fn at(&self, fraction: f64) -> (f64, f64) {
        let lerp = |a: f64, b: f64| a + (b - a) * fraction;
        let el = lerp(self.elevation_start_deg, self.elevation_end_deg);
        let az = lerp(self.azimuth_start_deg, self.azimuth_end_deg).rem_euclid(360.0);
        (az, el)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// C/N0 of an unobstructed satellite at zenith.
    pub open_sky_peak_dbhz: f64,
    pub elevation_exponent: f64,
    /// Uniform loss of the environment (walls, windows).
    pub attenuation_db: f64,
    /// Share of the azimuth circle, centred on north, with a view of the sky.
    pub sky_visibility_fraction: f64,
    pub noise_std_dbhz: f64,
}

impl ChannelModel {
    /// dB offset relative to zenith: `20 * exponent * log10(sin(max(el, 5 deg)))`.
    pub fn elevation_offset_db(&self, elevation_deg: f64) -> f64 {
        let el = elevation_deg.clamp(MIN_CURVE_ELEVATION_DEG, 90.0).to_radians();
        20.0 * self.elevation_exponent * el.sin().log10()
    }

    fn visible(&self, azimuth_deg: f64) -> bool {
        let from_north = azimuth_deg.min(360.0 - azimuth_deg);
        from_north <= 180.0 * self.sky_visibility_fraction
    }

    /// Noise-free C/N0 for a satellite above the horizon.
    pub fn ideal_cn0(&self, azimuth_deg: f64, elevation_deg: f64) -> f64 {
        let mask = if self.visible(azimuth_deg) { 0.0 } else { MASK_PENALTY_DB };
        self.open_sky_peak_dbhz + self.elevation_offset_db(elevation_deg)
            - self.attenuation_db
            - mask
    }

    /// No generated C/N0 ever exceeds this.
    pub fn cn0_ceiling(&self) -> f64 {
        (self.open_sky_peak_dbhz + NOISE_CLIP_SIGMAS * self.noise_std_dbhz).min(CN0_CEILING_DBHZ)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverModel {
    /// Minimum C/N0 for a signal to be reported as present.
    pub acquisition_threshold_dbhz: f64,
    /// Minimum C/N0 for a satellite to be eligible for the fix.
    pub tracking_threshold_dbhz: f64,
    pub fix_min_satellites: usize,
    /// How long a satellite must stay eligible before it joins a fix.
    pub fix_warmup_s: f64,
}

impl Default for ReceiverModel {
    fn default() -> Self {
        ReceiverModel {
            acquisition_threshold_dbhz: 12.0,
            tracking_threshold_dbhz: 28.0,
            fix_min_satellites: 4,
            fix_warmup_s: 45.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub duration_s: f64,
    pub cadence_s: f64,
    pub seed: u64,
    pub channel: ChannelModel,
    pub receiver: ReceiverModel,
    pub tracks: Vec<SatTrack>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError(m));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return fail(format!("duration_s must be > 0, got {}", self.duration_s));
        }
        if !(self.cadence_s.is_finite() && self.cadence_s > 0.0) {
            return fail(format!("cadence_s must be > 0, got {}", self.cadence_s));
        }
        if self.duration_s / self.cadence_s > MAX_EPOCHS {
            return fail(format!("more than {MAX_EPOCHS} epochs requested"));
        }
        let c = &self.channel;
        if !(c.open_sky_peak_dbhz > 0.0 && c.open_sky_peak_dbhz <= CN0_CEILING_DBHZ) {
            return fail(format!("open_sky_peak_dbhz must be in (0, 64], got {}", c.open_sky_peak_dbhz));
        }
        if !(c.elevation_exponent.is_finite() && c.elevation_exponent >= 0.0) {
            return fail("elevation_exponent must be >= 0".into());
        }
        if !(c.attenuation_db.is_finite() && c.attenuation_db >= 0.0) {
            return fail(format!("attenuation_db must be >= 0, got {}", c.attenuation_db));
        }
        if !(c.sky_visibility_fraction > 0.0 && c.sky_visibility_fraction <= 1.0) {
            return fail("sky_visibility_fraction must be in (0, 1]".into());
        }
        if !(c.noise_std_dbhz.is_finite() && c.noise_std_dbhz >= 0.0) {
            return fail("noise_std_dbhz must be >= 0".into());
        }
        let r = &self.receiver;
        if !(r.acquisition_threshold_dbhz.is_finite() && r.tracking_threshold_dbhz.is_finite()) {
            return fail("receiver thresholds must be finite".into());
        }
        if r.fix_min_satellites < 4 {
            return fail("fix_min_satellites must be >= 4".into());
        }
        if !(r.fix_warmup_s.is_finite() && r.fix_warmup_s >= 0.0) {
            return fail("fix_warmup_s must be >= 0".into());
        }
        let mut keys: Vec<SatelliteKey> = self.tracks.iter().map(|t| t.key).collect();
        keys.sort();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return fail(format!("track {} listed twice", w[0]));
        }
        for t in &self.tracks {
            for el in [t.elevation_start_deg, t.elevation_end_deg] {
                if !(-10.0..=90.0).contains(&el) {
                    return fail(format!("{}: elevation {el} outside [-10, 90]", t.key));
                }
            }
            if !(t.azimuth_start_deg.is_finite() && t.azimuth_end_deg.is_finite()) {
                return fail(format!("{}: azimuth must be finite", t.key));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| SynthError(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Rounds to `1 / scale`; dividing by an exact power of ten yields the same
/// double a decimal parser would produce.
fn quantize(value: f64, scale: f64) -> f64 {
    (value * scale).round() / scale
}

/// Generates the series described by `spec`. Equal specs give equal series.
pub fn generate(spec: &ScenarioSpec) -> Result<RawSeries, SynthError> {
    spec.validate()?;
    let channel = &spec.channel;
    let receiver = &spec.receiver;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, channel.noise_std_dbhz).map_err(|e| SynthError(e.to_string()))?;
    let clip = NOISE_CLIP_SIGMAS * channel.noise_std_dbhz;
    let ceiling = channel.cn0_ceiling();

    let n_epochs = (spec.duration_s / spec.cadence_s).ceil() as usize;
    let mut eligible_since: Vec<Option<f64>> = vec![None; spec.tracks.len()];
    let mut epochs = Vec::with_capacity(n_epochs);

    for k in 0..n_epochs {
        let t = quantize(k as f64 * spec.cadence_s, 1e3);
        if t >= spec.duration_s {
            break;
        }
        let fraction = t / spec.duration_s;
        let mut pending = Vec::with_capacity(spec.tracks.len());
        for (i, track) in spec.tracks.iter().enumerate() {
            // one draw per track and epoch keeps the noise stream independent of the channel
            let jitter = noise.sample(&mut rng).clamp(-clip, clip);
            let (az, el) = track.at(fraction);
            if el < 0.0 {
                eligible_since[i] = None;
                continue;
            }
            let raw = (channel.ideal_cn0(az, el) + jitter).clamp(0.0, ceiling);
            let mut cn0 = quantize(raw, 10.0);
            if cn0 > ceiling {
                cn0 = (ceiling * 10.0).floor() / 10.0;
            }
            let present = cn0 >= receiver.acquisition_threshold_dbhz && cn0 > 0.0;
            let eligible = present && cn0 >= receiver.tracking_threshold_dbhz;
            eligible_since[i] = match (eligible, eligible_since[i]) {
                (true, Some(since)) => Some(since),
                (true, None) => Some(t),
                (false, _) => None,
            };
            let warmed = eligible_since[i].is_some_and(|since| t - since >= receiver.fix_warmup_s);
            let az = match quantize(az, 10.0) {
                a if a >= 360.0 => 0.0,
                a => a,
            };
            let el = quantize(el, 10.0);
            let obs = if present {
                SatelliteObservation::tracked(track.key, cn0, az, el)
            } else {
                SatelliteObservation::untracked(track.key, az, el)
            };
            pending.push((obs.with_nav_data(true, warmed), warmed));
        }
        let fix = pending.iter().filter(|(_, w)| *w).count() >= receiver.fix_min_satellites;
        let observations = pending.into_iter().map(|(o, w)| o.with_fix(fix && w)).collect();
        let epoch = Epoch::new(t, observations).map_err(|e| SynthError(e.to_string()))?;
        epochs.push(epoch);
    }
    RawSeries::new(epochs, spec.cadence_s).map_err(|e| SynthError(e.to_string()))
}

/// Named scenarios modelled on typical measurement locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Open parking lot with an unobstructed sky.
    OpenSky,
    /// Street between tall buildings: half the sky masked, mild loss.
    UrbanCanyon,
    /// Room behind a closed window: about 16 dB of uniform loss.
    IndoorWindow,
    /// Interior room without any sky view.
    DeepIndoor,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::OpenSky, Preset::UrbanCanyon, Preset::IndoorWindow, Preset::DeepIndoor];

    pub fn name(self) -> &'static str {
        match self {
            Preset::OpenSky => "open_sky",
            Preset::UrbanCanyon => "urban_canyon",
            Preset::IndoorWindow => "indoor_window",
            Preset::DeepIndoor => "deep_indoor",
        }
    }

    /// Ground truth label: does the preset model an attenuating environment?
    pub fn is_attenuating(self) -> bool {
        matches!(self, Preset::IndoorWindow | Preset::DeepIndoor)
    }

    pub fn spec(self, seed: u64) -> ScenarioSpec {
        let (attenuation_db, sky_visibility_fraction, noise_std_dbhz) = match self {
            Preset::OpenSky => (0.0, 1.0, 1.0),
            Preset::UrbanCanyon => (3.0, 0.65, 1.0),
            Preset::IndoorWindow => (16.0, 1.0, 0.8),
            Preset::DeepIndoor => (32.0, 1.0, 1.0),
        };
        ScenarioSpec {
            duration_s: 400.0,
            cadence_s: 1.0,
            seed,
            channel: ChannelModel {
                open_sky_peak_dbhz: 42.0,
                elevation_exponent: 1.0,
                attenuation_db,
                sky_visibility_fraction,
                noise_std_dbhz,
            },
            receiver: ReceiverModel::default(),
            tracks: reference_sky(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| SynthError(format!("unknown preset `{s}`")))
    }
}

/// Preset spec with the default seed.
pub fn preset(which: Preset) -> ScenarioSpec {
    which.spec(1)
}

/// Eight satellites, GPS and GLONASS, spread over the sky. Only the two
/// highest ever climb above 52 degrees.
fn reference_sky() -> Vec<SatTrack> {
    const SKY: [(ConstellationId, u32, f64, f64, f64, f64); 8] = [
        (ConstellationId::Gps, 5, 76.0, 80.0, 10.0, 40.0),
        (ConstellationId::Gps, 13, 66.0, 62.0, 200.0, 190.0),
        (ConstellationId::Gps, 15, 52.0, 49.0, 95.0, 101.0),
        (ConstellationId::Gps, 20, 38.0, 41.0, 300.0, 296.0),
        (ConstellationId::Gps, 29, 31.0, 28.0, 150.0, 155.0),
        (ConstellationId::Glonass, 3, 24.0, 27.0, 250.0, 246.0),
        (ConstellationId::Glonass, 10, 21.0, 19.0, 335.0, 340.0),
        (ConstellationId::Glonass, 18, 14.0, 17.0, 60.0, 63.0),
    ];
    SKY.iter()
        .map(|&(c, svid, el0, el1, az0, az1)| SatTrack {
            key: SatelliteKey::new(c, svid).expect("nonzero svid"),
            elevation_start_deg: el0,
            elevation_end_deg: el1,
            azimuth_start_deg: az0,
            azimuth_end_deg: az1,
        })
        .collect()
}
