//! Detection of attenuating radio environments from GNSS raw measurements.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: observations, epochs and series plus the per-epoch aggregates
//!   (available satellites, satellites used in a fix, peak C/N0).
//! - [`ingest`]: the canonical GAD-CSV format and an NMEA-0183 reader.
//! - [`stats`]: windowed summaries, time to first fix, ECDFs and the
//!   Kolmogorov-Smirnov distance.
//! - [`detector`]: threshold criteria, the batch detection function, the
//!   online two-phase state machine and the stepwise attenuation estimate.
//! - [`calibrate`]: threshold derivation from labeled recordings.
//! - [`synth`]: seeded scenario generator for labeled synthetic logs.

pub mod calibrate;
pub mod detector;
pub mod ingest;
pub mod model;
pub mod stats;
pub mod synth;

pub use calibrate::{CalibrationResult, Confusion, LabeledDataset};
pub use detector::{
    AttenuationEstimate, AttenuationLevel, Combine, Criterion, CriterionFamily, DetectError,
    DetectionState, DetectorConfig, Phase,
};
pub use ingest::{IngestError, ParseReport};
pub use model::{ConstellationId, Epoch, ModelError, RawSeries, SatelliteKey, SatelliteObservation};
pub use stats::{Ecdf, SummaryStats, Window};
pub use synth::{Preset, ScenarioSpec};
