//! JSON documents printed on stdout. Every key is always present; missing
//! values are `null`.

use gad_core::calibrate::{Evaluation, CalibrationResult, Confusion};
use gad_core::detector::{Assessment, AttenuationEstimate, Criterion, DetectorConfig};
use gad_core::stats::Window;
use gad_core::{CriterionFamily, SummaryStats};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct WindowDoc {
    pub start_s: f64,
    pub duration_s: f64,
}

impl From<&Window> for WindowDoc {
    fn from(w: &Window) -> Self {
        WindowDoc { start_s: w.start_s(), duration_s: w.duration_s() }
    }
}

#[derive(Debug, Serialize)]
pub struct StatsDoc {
    pub input: String,
    pub epochs: usize,
    pub window: WindowDoc,
    pub window_epochs: usize,
    pub cn0_dbhz: Option<SummaryStats>,
    pub satellites_available: SummaryStats,
    pub satellites_used_in_fix: SummaryStats,
    pub distinct_satellites: usize,
    pub ttff_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CriterionDoc {
    pub criterion: Criterion,
    pub satisfied: bool,
}

#[derive(Debug, Serialize)]
pub struct WindowMetricsDoc {
    pub start_s: f64,
    pub duration_s: f64,
    pub epochs: usize,
    pub max_cn0_dbhz: Option<f64>,
    pub mean_cn0_dbhz: Option<f64>,
    pub mean_peak_cn0_dbhz: f64,
    pub distinct_satellites: usize,
    pub max_fix_satellites: usize,
}

#[derive(Debug, Serialize)]
pub struct AttenuationDoc {
    pub baseline_dbhz: f64,
    #[serde(flatten)]
    pub estimate: AttenuationEstimate,
}

#[derive(Debug, Serialize)]
pub struct DetectReportDoc {
    pub input: String,
    pub config: DetectorConfig,
    /// The default thresholds come from one receiver and are not tuned to this one.
    pub device_calibrated: bool,
    pub decision: u8,
    pub criteria: Vec<CriterionDoc>,
    pub window: WindowMetricsDoc,
    pub ttff_s: Option<f64>,
    pub attenuation: Option<AttenuationDoc>,
}

impl DetectReportDoc {
    pub fn new(
        input: String,
        config: &DetectorConfig,
        device_calibrated: bool,
        assessment: &Assessment,
        ttff_s: Option<f64>,
        attenuation: Option<AttenuationDoc>,
    ) -> Self {
        let ev = &assessment.evidence;
        let w = config.measurement_window();
        DetectReportDoc {
            input,
            config: config.clone(),
            device_calibrated,
            decision: assessment.decision(),
            criteria: assessment
                .outcomes
                .iter()
                .map(|(criterion, satisfied)| CriterionDoc { criterion: *criterion, satisfied: *satisfied })
                .collect(),
            window: WindowMetricsDoc {
                start_s: w.start_s(),
                duration_s: w.duration_s(),
                epochs: ev.epochs,
                max_cn0_dbhz: ev.max_cn0,
                mean_cn0_dbhz: ev.mean_cn0(),
                mean_peak_cn0_dbhz: ev.mean_peak_cn0(),
                distinct_satellites: ev.distinct_satellites(),
                max_fix_satellites: ev.max_fix,
            },
            ttff_s,
            attenuation,
        }
    }
}

/// One line per epoch in `detect --stream`.
#[derive(Debug, Serialize)]
pub struct StreamStateDoc {
    pub t_s: f64,
    pub elapsed_s: f64,
    pub phase: &'static str,
    pub decision: Option<u8>,
}

#[derive(Debug, Serialize)]
pub struct SkippedDoc {
    pub label: &'static str,
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct CalibrateDoc {
    pub manifest: String,
    pub metric: CriterionFamily,
    pub criterion: Criterion,
    pub threshold: f64,
    pub margin: f64,
    pub separable: bool,
    pub ks: f64,
    pub attenuating_metrics: Vec<f64>,
    pub open_metrics: Vec<f64>,
    pub confusion: Confusion,
    pub accuracy: Option<f64>,
    pub skipped: Vec<SkippedDoc>,
}

impl CalibrateDoc {
    pub fn new(
        manifest: String,
        result: &CalibrationResult,
        metrics: (Vec<f64>, Vec<f64>),
        evaluation: &Evaluation,
        skipped: Vec<SkippedDoc>,
    ) -> Self {
        CalibrateDoc {
            manifest,
            metric: result.metric,
            criterion: result.criterion(),
            threshold: result.threshold,
            margin: result.margin,
            separable: result.separable,
            ks: result.ks,
            attenuating_metrics: metrics.0,
            open_metrics: metrics.1,
            confusion: evaluation.confusion,
            accuracy: evaluation.confusion.accuracy(),
            skipped,
        }
    }
}
