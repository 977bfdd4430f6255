//! Attenuating-environment detection.
//!
//! A recording is split into an initialisation segment of `d0` seconds that
//! is ignored, followed by a measurement segment of `dm` seconds on which a
//! set of threshold criteria is evaluated. [`detect`] does this on a whole
//! series; [`online_step`] does the same one epoch at a time and reaches the
//! same decision.
//!
//! The measurement window is `[d0, d0 + dm)` relative to the first epoch,
//! cut off at the first epoch whose interval reaches `d0 + dm`
//! (`t + cadence >= d0 + dm`). For evenly sampled series the cut-off never
//! removes anything; it is what lets the online state machine decide without
//! waiting for an epoch past the window.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Epoch, RawSeries, SatelliteKey, SatelliteObservation};
use crate::stats::Window;

/// Initialisation and measurement durations, in seconds, for the reference device.
pub const DEFAULT_INIT_DURATION_S: f64 = 100.0;
pub const DEFAULT_MEASURE_DURATION_S: f64 = 100.0;
/// Peak C/N0 at or below which an epoch counts as attenuated (reference device).
pub const DEFAULT_MAX_CN0_DBHZ: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
    #[error("series spans {span_s} s but {required_s} s (init + measurement) are required")]
    SeriesTooShort { span_s: f64, required_s: f64 },
    #[error("epoch at {next} s does not follow {prev} s")]
    OutOfOrderEpoch { prev: f64, next: f64 },
}

/// A threshold test on the measurement window. Each is satisfied when the
/// environment looks attenuated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum Criterion {
    /// Every epoch's peak C/N0 is at or below the threshold (dB-Hz).
    MaxCn0Below(f64),
    /// Pooled mean C/N0 is below the threshold (dB-Hz).
    AvgCn0Below(f64),
    /// Fewer distinct satellites than the threshold were heard.
    DistinctSatsBelow(f64),
    /// The largest per-epoch fix count is below the threshold.
    FixSatsBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionFamily {
    MaxCn0,
    AvgCn0,
    DistinctSats,
    FixSats,
}

impl CriterionFamily {
    pub const ALL: [CriterionFamily; 4] = [
        CriterionFamily::MaxCn0,
        CriterionFamily::AvgCn0,
        CriterionFamily::DistinctSats,
        CriterionFamily::FixSats,
    ];

    pub fn with_threshold(self, threshold: f64) -> Criterion {
        match self {
            CriterionFamily::MaxCn0 => Criterion::MaxCn0Below(threshold),
            CriterionFamily::AvgCn0 => Criterion::AvgCn0Below(threshold),
            CriterionFamily::DistinctSats => Criterion::DistinctSatsBelow(threshold),
            CriterionFamily::FixSats => Criterion::FixSatsBelow(threshold),
        }
    }

    pub fn is_cn0(self) -> bool {
        matches!(self, CriterionFamily::MaxCn0 | CriterionFamily::AvgCn0)
    }

    pub fn name(self) -> &'static str {
        match self {
            CriterionFamily::MaxCn0 => "max_cn0",
            CriterionFamily::AvgCn0 => "avg_cn0",
            CriterionFamily::DistinctSats => "distinct_sats",
            CriterionFamily::FixSats => "fix_sats",
        }
    }
}

impl std::str::FromStr for CriterionFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        CriterionFamily::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| format!("unknown metric `{s}` (max_cn0, avg_cn0, distinct_sats, fix_sats)"))
    }
}

impl Criterion {
    pub fn family(&self) -> CriterionFamily {
        match self {
            Criterion::MaxCn0Below(_) => CriterionFamily::MaxCn0,
            Criterion::AvgCn0Below(_) => CriterionFamily::AvgCn0,
            Criterion::DistinctSatsBelow(_) => CriterionFamily::DistinctSats,
            Criterion::FixSatsBelow(_) => CriterionFamily::FixSats,
        }
    }

    pub fn threshold(&self) -> f64 {
        match *self {
            Criterion::MaxCn0Below(t)
            | Criterion::AvgCn0Below(t)
            | Criterion::DistinctSatsBelow(t)
            | Criterion::FixSatsBelow(t) => t,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let t = self.threshold();
        if !t.is_finite() {
            return Err(format!("{self}: threshold must be finite"));
        }
        if !self.family().is_cn0() && t < 0.0 {
            return Err(format!("{self}: count threshold must be >= 0"));
        }
        Ok(())
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::MaxCn0Below(t) => write!(f, "max C/N0 <= {t} dB-Hz"),
            Criterion::AvgCn0Below(t) => write!(f, "mean C/N0 < {t} dB-Hz"),
            Criterion::DistinctSatsBelow(t) => write!(f, "distinct satellites < {t}"),
            Criterion::FixSatsBelow(t) => write!(f, "satellites in fix < {t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    #[default]
    All,
    Any,
}

/// Deficit boundaries (dB below the open-sky baseline) for the stepwise
/// attenuation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttenuationSteps {
    pub moderate_db: f64,
    pub strong_db: f64,
    pub severe_db: f64,
}

impl Default for AttenuationSteps {
    fn default() -> Self {
        AttenuationSteps { moderate_db: 5.0, strong_db: 12.0, severe_db: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// d0: leading segment that is never evaluated.
    pub init_duration_s: f64,
    /// dm: length of the evaluated segment.
    pub measure_duration_s: f64,
    pub criteria: Vec<Criterion>,
    pub combine: Combine,
    /// Observations below this elevation are ignored by the C/N0 criteria.
    pub elevation_mask_deg: Option<f64>,
    /// Satellites (e.g. pseudolites) ignored by every criterion.
    pub excluded: BTreeSet<SatelliteKey>,
    pub attenuation_steps: AttenuationSteps,
}

impl Default for DetectorConfig {
    /// Reference configuration: d0 = dm = 100 s, peak C/N0 at most 30 dB-Hz.
    /// The thresholds are specific to the receiver they were measured on.
    fn default() -> Self {
        DetectorConfig {
            init_duration_s: DEFAULT_INIT_DURATION_S,
            measure_duration_s: DEFAULT_MEASURE_DURATION_S,
            criteria: vec![Criterion::MaxCn0Below(DEFAULT_MAX_CN0_DBHZ)],
            combine: Combine::All,
            elevation_mask_deg: None,
            excluded: BTreeSet::new(),
            attenuation_steps: AttenuationSteps::default(),
        }
    }
}

impl DetectorConfig {
    pub fn with_criteria(criteria: Vec<Criterion>) -> Self {
        DetectorConfig { criteria, ..DetectorConfig::default() }
    }

    /// Parses and validates a TOML config; missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self, DetectError> {
        let config: DetectorConfig =
            toml::from_str(text).map_err(|e| DetectError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("detector configs always serialize")
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: String| Err(DetectError::InvalidConfig(m));
        if !(self.init_duration_s.is_finite() && self.init_duration_s >= 0.0) {
            return bad(format!("init duration must be >= 0, got {}", self.init_duration_s));
        }
        if !(self.measure_duration_s.is_finite() && self.measure_duration_s > 0.0) {
            return bad(format!("measure duration must be > 0, got {}", self.measure_duration_s));
        }
        if self.criteria.is_empty() {
            return bad("at least one criterion is required".into());
        }
        for c in &self.criteria {
            c.validate().map_err(DetectError::InvalidConfig)?;
        }
        if let Some(mask) = self.elevation_mask_deg {
            if !(-90.0..=90.0).contains(&mask) {
                return bad(format!("elevation mask {mask} outside [-90, 90]"));
            }
        }
        let s = &self.attenuation_steps;
        if !(s.moderate_db <= s.strong_db && s.strong_db <= s.severe_db && s.severe_db.is_finite()) {
            return bad("attenuation steps must be finite and ascending".into());
        }
        Ok(())
    }

    /// Total duration a series must cover: d0 + dm.
    pub fn required_span_s(&self) -> f64 {
        self.init_duration_s + self.measure_duration_s
    }

    pub fn measurement_window(&self) -> Window {
        Window::new(self.init_duration_s, self.measure_duration_s)
            .expect("validated config has a positive measurement duration")
    }

    fn counts(&self, obs: &SatelliteObservation) -> bool {
        !self.excluded.contains(&obs.key)
    }

    fn feeds_cn0(&self, obs: &SatelliteObservation) -> bool {
        obs.signal_present
            && self.counts(obs)
            && self.elevation_mask_deg.is_none_or(|m| obs.elevation_deg >= m)
    }

    /// Peak C/N0 of an epoch after exclusion and elevation filtering.
    pub fn epoch_max_cn0(&self, epoch: &Epoch) -> Option<f64> {
        epoch
            .observations()
            .iter()
            .filter(|o| self.feeds_cn0(o))
            .map(|o| o.cn0_dbhz)
            .reduce(f64::max)
    }
}

/// Running aggregates over the epochs of a measurement window, enough to
/// evaluate every criterion family.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowEvidence {
    pub epochs: usize,
    /// Largest filtered per-epoch peak C/N0; `None` when no epoch had one.
    pub max_cn0: Option<f64>,
    cn0_sum: f64,
    cn0_count: usize,
    /// Sum of per-epoch peaks, with 0 for epochs without any signal.
    peak_sum: f64,
    satellites: BTreeSet<SatelliteKey>,
    pub max_fix: usize,
}

impl WindowEvidence {
    pub fn absorb(&mut self, epoch: &Epoch, config: &DetectorConfig) {
        self.epochs += 1;
        let mut peak: Option<f64> = None;
        let mut fix = 0;
        for obs in epoch.observations() {
            if config.feeds_cn0(obs) {
                self.cn0_sum += obs.cn0_dbhz;
                self.cn0_count += 1;
                peak = Some(peak.map_or(obs.cn0_dbhz, |p| p.max(obs.cn0_dbhz)));
            }
            if config.counts(obs) {
                if obs.signal_present {
                    self.satellites.insert(obs.key);
                }
                if obs.used_in_fix {
                    fix += 1;
                }
            }
        }
        if let Some(p) = peak {
            self.max_cn0 = Some(self.max_cn0.map_or(p, |m| m.max(p)));
        }
        self.peak_sum += peak.unwrap_or(0.0);
        self.max_fix = self.max_fix.max(fix);
    }

    pub fn gather<'a>(epochs: impl IntoIterator<Item = &'a Epoch>, config: &DetectorConfig) -> Self {
        let mut ev = WindowEvidence::default();
        for e in epochs {
            ev.absorb(e, config);
        }
        ev
    }

    /// Pooled mean C/N0 of the filtered observations.
    pub fn mean_cn0(&self) -> Option<f64> {
        (self.cn0_count > 0).then(|| self.cn0_sum / self.cn0_count as f64)
    }

    /// Mean of per-epoch peaks, 0 when the window holds no epoch.
    pub fn mean_peak_cn0(&self) -> f64 {
        if self.epochs == 0 {
            0.0
        } else {
            self.peak_sum / self.epochs as f64
        }
    }

    pub fn distinct_satellites(&self) -> usize {
        self.satellites.len()
    }

    pub fn satisfies(&self, criterion: &Criterion) -> bool {
        match *criterion {
            Criterion::MaxCn0Below(t) => self.max_cn0.is_none_or(|m| m <= t),
            Criterion::AvgCn0Below(t) => self.mean_cn0().is_none_or(|m| m < t),
            Criterion::DistinctSatsBelow(t) => (self.distinct_satellites() as f64) < t,
            Criterion::FixSatsBelow(t) => (self.max_fix as f64) < t,
        }
    }

    /// Per-criterion outcomes and their combination.
    pub fn assess(&self, config: &DetectorConfig) -> Assessment {
        let outcomes: Vec<(Criterion, bool)> =
            config.criteria.iter().map(|c| (*c, self.satisfies(c))).collect();
        let attenuating = match config.combine {
            Combine::All => outcomes.iter().all(|(_, ok)| *ok),
            Combine::Any => outcomes.iter().any(|(_, ok)| *ok),
        };
        Assessment { attenuating, outcomes, evidence: self.clone() }
    }
}

/// Full result of a detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub attenuating: bool,
    pub outcomes: Vec<(Criterion, bool)>,
    pub evidence: WindowEvidence,
}

impl Assessment {
    /// Detection result as 0/1.
    pub fn decision(&self) -> u8 {
        u8::from(self.attenuating)
    }
}

/// Evaluates one criterion over an arbitrary window of the series.
pub fn evaluate_criterion(
    criterion: &Criterion,
    series: &RawSeries,
    window: &Window,
    config: &DetectorConfig,
) -> bool {
    WindowEvidence::gather(window.select(series), config).satisfies(criterion)
}

/// Epochs feeding the decision, per the window rule in the module docs.
fn decision_epochs<'a>(
    series: &'a RawSeries,
    config: &DetectorConfig,
) -> Result<impl Iterator<Item = &'a Epoch>, DetectError> {
    config.validate()?;
    let required = config.required_span_s();
    let span = series.span_s();
    if series.is_empty() || span < required {
        return Err(DetectError::SeriesTooShort { span_s: span, required_s: required });
    }
    let cadence = series.cadence_s();
    let window = config.measurement_window();
    let mut reached = false;
    Ok(series
        .relative()
        .take_while(move |(t, _)| {
            let keep = !reached;
            reached |= t + cadence >= required;
            keep
        })
        .filter(move |(t, _)| window.contains(*t))
        .map(|(_, e)| e))
}

/// Batch detection with per-criterion detail.
pub fn assess(series: &RawSeries, config: &DetectorConfig) -> Result<Assessment, DetectError> {
    Ok(WindowEvidence::gather(decision_epochs(series, config)?, config).assess(config))
}

/// Returns `true` (1) when the series was recorded in an attenuating environment.
pub fn detect(series: &RawSeries, config: &DetectorConfig) -> Result<bool, DetectError> {
    assess(series, config).map(|a| a.attenuating)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "phase", content = "decision")]
pub enum Phase {
    Initializing,
    Measuring,
    Decided(u8),
}

impl Phase {
    fn rank(self) -> u8 {
        match self {
            Phase::Initializing => 0,
            Phase::Measuring => 1,
            Phase::Decided(_) => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Initializing => "initializing",
            Phase::Measuring => "measuring",
            Phase::Decided(_) => "decided",
        }
    }
}

/// State of an online detection session.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionState {
    phase: Phase,
    cadence_s: f64,
    start_s: Option<f64>,
    last_s: Option<f64>,
    elapsed_s: f64,
    evidence: WindowEvidence,
    assessment: Option<Assessment>,
}

impl DetectionState {
    /// A fresh session for a stream sampled every `cadence_s` seconds.
    pub fn new(cadence_s: f64) -> Result<Self, DetectError> {
        if !(cadence_s.is_finite() && cadence_s > 0.0) {
            return Err(DetectError::InvalidConfig(format!("cadence must be > 0, got {cadence_s}")));
        }
        Ok(DetectionState {
            phase: Phase::Initializing,
            cadence_s,
            start_s: None,
            last_s: None,
            elapsed_s: 0.0,
            evidence: WindowEvidence::default(),
            assessment: None,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Time covered so far: relative timestamp of the latest epoch plus one cadence.
    pub fn elapsed_s(&self) -> f64 {
        self.elapsed_s
    }

    pub fn evidence(&self) -> &WindowEvidence {
        &self.evidence
    }

    pub fn decision(&self) -> Option<u8> {
        match self.phase {
            Phase::Decided(r) => Some(r),
            _ => None,
        }
    }

    pub fn assessment(&self) -> Option<&Assessment> {
        self.assessment.as_ref()
    }

    fn advance(&mut self, next: Phase) {
        debug_assert!(next.rank() >= self.phase.rank());
        self.phase = next;
    }
}

/// Feeds one epoch into an online session.
pub fn online_step(
    mut state: DetectionState,
    epoch: &Epoch,
    config: &DetectorConfig,
) -> Result<DetectionState, DetectError> {
    config.validate()?;
    let t = epoch.timestamp_s();
    if let Some(prev) = state.last_s {
        if t <= prev {
            return Err(DetectError::OutOfOrderEpoch { prev, next: t });
        }
    }
    state.last_s = Some(t);
    let rel = t - *state.start_s.get_or_insert(t);
    state.elapsed_s = rel + state.cadence_s;
    if matches!(state.phase, Phase::Decided(_)) {
        return Ok(state);
    }

    let required = config.required_span_s();
    if config.measurement_window().contains(rel) {
        state.advance(Phase::Measuring);
        state.evidence.absorb(epoch, config);
    }
    if state.elapsed_s >= required {
        let assessment = state.evidence.assess(config);
        state.advance(Phase::Decided(assessment.decision()));
        state.assessment = Some(assessment);
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AttenuationLevel {
    None,
    Moderate,
    Strong,
    Severe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationEstimate {
    pub level: AttenuationLevel,
    /// Mean per-epoch peak C/N0 over the measurement window.
    pub metric_dbhz: f64,
    /// Baseline minus metric.
    pub deficit_db: f64,
}

impl AttenuationSteps {
    pub fn classify(&self, deficit_db: f64) -> AttenuationLevel {
        if deficit_db >= self.severe_db {
            AttenuationLevel::Severe
        } else if deficit_db >= self.strong_db {
            AttenuationLevel::Strong
        } else if deficit_db >= self.moderate_db {
            AttenuationLevel::Moderate
        } else {
            AttenuationLevel::None
        }
    }
}

/// Stepwise attenuation estimate relative to an open-sky peak C/N0 baseline.
pub fn estimate_attenuation(
    series: &RawSeries,
    config: &DetectorConfig,
    open_sky_baseline_dbhz: f64,
) -> Result<AttenuationEstimate, DetectError> {
    if !open_sky_baseline_dbhz.is_finite() {
        return Err(DetectError::InvalidConfig("baseline must be finite".into()));
    }
    let evidence = WindowEvidence::gather(decision_epochs(series, config)?, config);
    let metric_dbhz = evidence.mean_peak_cn0();
    let deficit_db = open_sky_baseline_dbhz - metric_dbhz;
    Ok(AttenuationEstimate {
        level: config.attenuation_steps.classify(deficit_db),
        metric_dbhz,
        deficit_db,
    })
}
