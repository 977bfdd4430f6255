//! Device-specific threshold calibration from labeled recordings.
//!
//! Each recording is reduced to one scalar per criterion family, measured on
//! the same window the detector uses. Attenuating recordings are expected to
//! score lower than open ones for every family.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{self, Criterion, CriterionFamily, DetectError, DetectorConfig, WindowEvidence};
use crate::model::RawSeries;
use crate::stats::{ks_distance, Ecdf};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrateError {
    #[error("the {0} class has no recordings")]
    EmptyClass(&'static str),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// A recording with an optional location tag.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: RawSeries,
    pub location: Option<String>,
}

impl From<RawSeries> for LabeledSeries {
    fn from(series: RawSeries) -> Self {
        LabeledSeries { series, location: None }
    }
}

/// Recordings made inside attenuating environments and outside them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub attenuating: Vec<LabeledSeries>,
    pub open: Vec<LabeledSeries>,
}

impl LabeledDataset {
    pub fn new(attenuating: Vec<RawSeries>, open: Vec<RawSeries>) -> Self {
        LabeledDataset {
            attenuating: attenuating.into_iter().map(Into::into).collect(),
            open: open.into_iter().map(Into::into).collect(),
        }
    }

    fn check_nonempty(&self) -> Result<(), CalibrateError> {
        if self.attenuating.is_empty() {
            return Err(CalibrateError::EmptyClass("attenuating"));
        }
        if self.open.is_empty() {
            return Err(CalibrateError::EmptyClass("open"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub metric: CriterionFamily,
    pub threshold: f64,
    /// Width of the gap between the classes; 0 when they overlap.
    pub margin: f64,
    pub separable: bool,
    /// KS distance between the per-recording metric distributions.
    pub ks: f64,
}

impl CalibrationResult {
    pub fn criterion(&self) -> Criterion {
        self.metric.with_threshold(self.threshold)
    }
}

/// The scalar a criterion of `family` thresholds, over the detection window.
///
/// Windows without any C/N0 sample score 0 for the C/N0 families.
pub fn extract_metric(
    series: &RawSeries,
    config: &DetectorConfig,
    family: CriterionFamily,
) -> Result<f64, DetectError> {
    let evidence = detector::assess(series, config)?.evidence;
    Ok(metric_of(&evidence, family))
}

fn metric_of(evidence: &WindowEvidence, family: CriterionFamily) -> f64 {
    match family {
        CriterionFamily::MaxCn0 => evidence.max_cn0.unwrap_or(0.0),
        CriterionFamily::AvgCn0 => evidence.mean_cn0().unwrap_or(0.0),
        CriterionFamily::DistinctSats => evidence.distinct_satellites() as f64,
        CriterionFamily::FixSats => evidence.max_fix as f64,
    }
}

fn class_metrics(
    class: &[LabeledSeries],
    config: &DetectorConfig,
    family: CriterionFamily,
) -> Result<Vec<f64>, DetectError> {
    class.iter().map(|s| extract_metric(&s.series, config, family)).collect()
}

/// Derives a threshold separating the two classes on one metric.
///
/// Separable classes get the midpoint of the gap. Otherwise the threshold is
/// the sample point where the two empirical CDFs differ most.
pub fn derive_threshold(
    data: &LabeledDataset,
    config: &DetectorConfig,
    family: CriterionFamily,
) -> Result<CalibrationResult, CalibrateError> {
    data.check_nonempty()?;
    let att = class_metrics(&data.attenuating, config, family)?;
    let open = class_metrics(&data.open, config, family)?;
    Ok(split(&att, &open, family))
}

pub(crate) fn split(att: &[f64], open: &[f64], family: CriterionFamily) -> CalibrationResult {
    let att_ecdf = Ecdf::new(att).expect("metrics are finite and nonempty");
    let open_ecdf = Ecdf::new(open).expect("metrics are finite and nonempty");
    let ks = ks_distance(&att_ecdf, &open_ecdf);

    let att_max = att.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let open_min = open.iter().copied().fold(f64::INFINITY, f64::min);
    if att_max < open_min {
        return CalibrationResult {
            metric: family,
            threshold: att_max + (open_min - att_max) / 2.0,
            margin: open_min - att_max,
            separable: true,
            ks,
        };
    }

    let mut best = (f64::NEG_INFINITY, -1.0);
    for &x in att_ecdf.values().iter().chain(open_ecdf.values()) {
        let gap = (att_ecdf.cdf(x) - open_ecdf.cdf(x)).abs();
        if gap > best.1 || (gap == best.1 && x < best.0) {
            best = (x, gap);
        }
    }
    CalibrationResult { metric: family, threshold: best.0, margin: 0.0, separable: false, ks }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| (self.tp + self.tn) as f64 / n as f64)
    }
}

/// A recording that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSeries {
    pub attenuating: bool,
    pub index: usize,
    pub error: DetectError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: Confusion,
    pub skipped: Vec<SkippedSeries>,
}

/// Runs the detector on every labeled recording. Attenuating is the positive class.
///
/// Recordings that are too short are skipped and reported; an invalid
/// configuration fails the whole evaluation.
pub fn evaluate_config(
    data: &LabeledDataset,
    config: &DetectorConfig,
) -> Result<Evaluation, DetectError> {
    config.validate()?;
    let mut confusion = Confusion::default();
    let mut skipped = Vec::new();
    let classes = [(true, &data.attenuating), (false, &data.open)];
    for (label, class) in classes {
        for (index, s) in class.iter().enumerate() {
            match detector::detect(&s.series, config) {
                Ok(predicted) => match (label, predicted) {
                    (true, true) => confusion.tp += 1,
                    (true, false) => confusion.fn_ += 1,
                    (false, true) => confusion.fp += 1,
                    (false, false) => confusion.tn += 1,
                },
                Err(error @ DetectError::SeriesTooShort { .. }) => {
                    skipped.push(SkippedSeries { attenuating: label, index, error })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Evaluation { confusion, skipped })
}

/// `config` with its criteria replaced by the calibrated one.
pub fn calibrated_config(config: &DetectorConfig, result: &CalibrationResult) -> DetectorConfig {
    DetectorConfig { criteria: vec![result.criterion()], ..config.clone() }
}
