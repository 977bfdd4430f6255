//! Python bindings: `import gadetect`.
//!
//! Series and configs are opaque handles; summaries, assessments and
//! calibration results come back as plain dicts.

use std::collections::BTreeSet;

use gad_core::calibrate::{self as cal, LabeledDataset};
use gad_core::detector::{
    self, Combine, Criterion, CriterionFamily, DetectError, DetectionState, Phase,
};
use gad_core::ingest::{self, IngestError};
use gad_core::model::{self, ConstellationId, SatelliteKey};
use gad_core::stats::{self, SatCount, SummaryStats, Window};
use gad_core::synth::{self, Preset, ScenarioSpec};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(gadetect, GadError, PyValueError, "Base class of all gadetect errors.");
create_exception!(gadetect, ParseError, GadError, "Input could not be parsed.");
create_exception!(gadetect, SeriesTooShortError, GadError, "Series shorter than init + measurement.");
create_exception!(gadetect, EmptyWindowError, GadError, "Window holds no samples.");

fn invalid(e: impl std::fmt::Display) -> PyErr {
    GadError::new_err(e.to_string())
}

fn ingest_err(e: IngestError) -> PyErr {
    match e {
        IngestError::InvalidCadence(_) => invalid(e),
        _ => ParseError::new_err(e.to_string()),
    }
}

fn detect_err(e: DetectError) -> PyErr {
    match e {
        DetectError::SeriesTooShort { .. } => SeriesTooShortError::new_err(e.to_string()),
        _ => invalid(e),
    }
}

fn stats_err(e: stats::StatsError) -> PyErr {
    match e {
        stats::StatsError::EmptyWindow => EmptyWindowError::new_err(e.to_string()),
        _ => invalid(e),
    }
}

fn calibrate_err(e: cal::CalibrateError) -> PyErr {
    match e {
        cal::CalibrateError::Detect(d) => detect_err(d),
        _ => invalid(e),
    }
}

/// One satellite as reported in one epoch.
#[pyclass(frozen, from_py_object, name = "Observation")]
#[derive(Clone)]
struct PyObservation(model::SatelliteObservation);

#[pymethods]
impl PyObservation {
    #[new]
    #[pyo3(signature = (constellation, svid, cn0_dbhz, azimuth_deg, elevation_deg,
        signal_present=true, used_in_fix=false, has_almanac=false, has_ephemeris=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        constellation: &str,
        svid: u32,
        cn0_dbhz: f64,
        azimuth_deg: f64,
        elevation_deg: f64,
        signal_present: bool,
        used_in_fix: bool,
        has_almanac: bool,
        has_ephemeris: bool,
    ) -> PyResult<Self> {
        let c: ConstellationId = constellation.parse().map_err(invalid)?;
        let key = SatelliteKey::new(c, svid).map_err(invalid)?;
        let obs = model::SatelliteObservation {
            key,
            cn0_dbhz,
            azimuth_deg,
            elevation_deg,
            signal_present,
            used_in_fix,
            has_almanac,
            has_ephemeris,
        };
        obs.validate().map_err(invalid)?;
        Ok(PyObservation(obs))
    }

    #[getter]
    fn key(&self) -> String {
        self.0.key.to_string()
    }
    #[getter]
    fn constellation(&self) -> &'static str {
        self.0.key.constellation().as_str()
    }
    #[getter]
    fn svid(&self) -> u32 {
        self.0.key.svid()
    }
    #[getter]
    fn cn0_dbhz(&self) -> f64 {
        self.0.cn0_dbhz
    }
    #[getter]
    fn azimuth_deg(&self) -> f64 {
        self.0.azimuth_deg
    }
    #[getter]
    fn elevation_deg(&self) -> f64 {
        self.0.elevation_deg
    }
    #[getter]
    fn signal_present(&self) -> bool {
        self.0.signal_present
    }
    #[getter]
    fn used_in_fix(&self) -> bool {
        self.0.used_in_fix
    }

    fn __repr__(&self) -> String {
        let o = &self.0;
        format!(
            "Observation({}, cn0={}, az={}, el={}, rho={}, chi={})",
            o.key, o.cn0_dbhz, o.azimuth_deg, o.elevation_deg, o.signal_present, o.used_in_fix
        )
    }
}

/// All observations reported at one instant.
#[pyclass(frozen, from_py_object, name = "Epoch")]
#[derive(Clone)]
struct PyEpoch(model::Epoch);

#[pymethods]
impl PyEpoch {
    #[new]
    fn new(timestamp_s: f64, observations: Vec<PyObservation>) -> PyResult<Self> {
        let obs = observations.into_iter().map(|o| o.0).collect();
        model::Epoch::new(timestamp_s, obs).map(PyEpoch).map_err(invalid)
    }

    #[getter]
    fn timestamp_s(&self) -> f64 {
        self.0.timestamp_s()
    }
    #[getter]
    fn observations(&self) -> Vec<PyObservation> {
        self.0.observations().iter().copied().map(PyObservation).collect()
    }
    #[getter]
    fn satellite_count(&self) -> usize {
        self.0.satellite_count()
    }
    #[getter]
    fn fix_count(&self) -> usize {
        self.0.fix_count()
    }
    #[getter]
    fn max_cn0(&self) -> Option<f64> {
        self.0.max_cn0()
    }

    fn __len__(&self) -> usize {
        self.0.observations().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Epoch(t={}, observations={}, S={}, X={})",
            self.0.timestamp_s(),
            self.0.observations().len(),
            self.0.satellite_count(),
            self.0.fix_count()
        )
    }
}

/// A time-ordered recording.
#[pyclass(frozen, from_py_object, name = "Series")]
#[derive(Clone)]
struct PySeries(model::RawSeries);

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (epochs, cadence_s=model::DEFAULT_CADENCE_S))]
    fn new(epochs: Vec<PyEpoch>, cadence_s: f64) -> PyResult<Self> {
        let epochs = epochs.into_iter().map(|e| e.0).collect();
        model::RawSeries::new(epochs, cadence_s).map(PySeries).map_err(invalid)
    }

    /// Parses GAD-CSV text.
    #[staticmethod]
    #[pyo3(signature = (text, cadence_s=model::DEFAULT_CADENCE_S))]
    fn from_gad_csv(text: &str, cadence_s: f64) -> PyResult<Self> {
        ingest::parse_gad_csv_with_cadence(text, cadence_s)
            .map(|r| PySeries(r.series))
            .map_err(ingest_err)
    }

    /// Parses NMEA-0183 text.
    #[staticmethod]
    #[pyo3(signature = (text, cadence_s=model::DEFAULT_CADENCE_S))]
    fn from_nmea(text: &str, cadence_s: f64) -> PyResult<Self> {
        ingest::parse_nmea_with_cadence(text, cadence_s)
            .map(|r| PySeries(r.series))
            .map_err(ingest_err)
    }

    fn to_gad_csv(&self) -> String {
        ingest::write_gad_csv(&self.0)
    }

    #[getter]
    fn epochs(&self) -> Vec<PyEpoch> {
        self.0.epochs().iter().cloned().map(PyEpoch).collect()
    }
    #[getter]
    fn cadence_s(&self) -> f64 {
        self.0.cadence_s()
    }
    #[getter]
    fn span_s(&self) -> f64 {
        self.0.span_s()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Series(epochs={}, span_s={})", self.0.len(), self.0.span_s())
    }
}

fn parse_criterion(metric: &str, threshold: f64) -> PyResult<Criterion> {
    let family: CriterionFamily = metric.parse().map_err(invalid)?;
    Ok(family.with_threshold(threshold))
}

/// Detection parameters. Defaults are the reference configuration:
/// d0 = dm = 100 s, peak C/N0 at most 30 dB-Hz.
#[pyclass(frozen, skip_from_py_object, name = "DetectorConfig")]
#[derive(Clone)]
struct PyConfig(detector::DetectorConfig);

#[pymethods]
impl PyConfig {
    /// `criteria` is a list of `(metric, threshold)` pairs, metric one of
    /// `max_cn0`, `avg_cn0`, `distinct_sats`, `fix_sats`.
    #[new]
    #[pyo3(signature = (init_duration_s=100.0, measure_duration_s=100.0, criteria=None,
        combine="all", elevation_mask_deg=None, excluded=Vec::new()))]
    fn new(
        init_duration_s: f64,
        measure_duration_s: f64,
        criteria: Option<Vec<(String, f64)>>,
        combine: &str,
        elevation_mask_deg: Option<f64>,
        excluded: Vec<String>,
    ) -> PyResult<Self> {
        let mut config = detector::DetectorConfig {
            init_duration_s,
            measure_duration_s,
            elevation_mask_deg,
            ..Default::default()
        };
        if let Some(criteria) = criteria {
            config.criteria = criteria
                .iter()
                .map(|(m, t)| parse_criterion(m, *t))
                .collect::<PyResult<_>>()?;
        }
        config.combine = match combine.to_ascii_lowercase().as_str() {
            "all" => Combine::All,
            "any" => Combine::Any,
            other => return Err(invalid(format!("combine must be `all` or `any`, got `{other}`"))),
        };
        config.excluded = excluded
            .iter()
            .map(|k| k.parse::<SatelliteKey>().map_err(invalid))
            .collect::<PyResult<BTreeSet<_>>>()?;
        config.validate().map_err(detect_err)?;
        Ok(PyConfig(config))
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        detector::DetectorConfig::from_toml(text).map(PyConfig).map_err(detect_err)
    }

    fn to_toml(&self) -> String {
        self.0.to_toml()
    }

    #[getter]
    fn init_duration_s(&self) -> f64 {
        self.0.init_duration_s
    }
    #[getter]
    fn measure_duration_s(&self) -> f64 {
        self.0.measure_duration_s
    }
    #[getter]
    fn criteria(&self) -> Vec<(&'static str, f64)> {
        self.0.criteria.iter().map(|c| (c.family().name(), c.threshold())).collect()
    }

    fn __repr__(&self) -> String {
        let criteria: Vec<String> = self.0.criteria.iter().map(|c| c.to_string()).collect();
        format!(
            "DetectorConfig(d0={}, dm={}, criteria={:?})",
            self.0.init_duration_s, self.0.measure_duration_s, criteria
        )
    }
}

fn config_or_default(config: Option<&PyConfig>) -> detector::DetectorConfig {
    config.map(|c| c.0.clone()).unwrap_or_default()
}

fn summary_dict<'py>(py: Python<'py>, s: &SummaryStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", s.mean)?;
    d.set_item("std_dev", s.std_dev)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    d.set_item("n", s.n)?;
    Ok(d)
}

/// 1 when the series was recorded in an attenuating environment, else 0.
#[pyfunction]
#[pyo3(signature = (series, config=None))]
fn detect(series: &PySeries, config: Option<&PyConfig>) -> PyResult<u8> {
    detector::detect(&series.0, &config_or_default(config))
        .map(u8::from)
        .map_err(detect_err)
}

/// Decision with per-criterion outcomes and window metrics.
#[pyfunction]
#[pyo3(signature = (series, config=None))]
fn assess<'py>(
    py: Python<'py>,
    series: &PySeries,
    config: Option<&PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = config_or_default(config);
    let a = detector::assess(&series.0, &config).map_err(detect_err)?;
    let d = PyDict::new(py);
    d.set_item("decision", a.decision())?;
    let outcomes: Vec<(String, bool)> = a.outcomes.iter().map(|(c, ok)| (c.to_string(), *ok)).collect();
    d.set_item("criteria", outcomes)?;
    d.set_item("epochs", a.evidence.epochs)?;
    d.set_item("max_cn0_dbhz", a.evidence.max_cn0)?;
    d.set_item("mean_cn0_dbhz", a.evidence.mean_cn0())?;
    d.set_item("distinct_satellites", a.evidence.distinct_satellites())?;
    d.set_item("max_fix_satellites", a.evidence.max_fix)?;
    Ok(d)
}

/// Stepwise attenuation relative to an open-sky peak C/N0 baseline.
#[pyfunction]
#[pyo3(signature = (series, baseline_dbhz, config=None))]
fn estimate_attenuation<'py>(
    py: Python<'py>,
    series: &PySeries,
    baseline_dbhz: f64,
    config: Option<&PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let est = detector::estimate_attenuation(&series.0, &config_or_default(config), baseline_dbhz)
        .map_err(detect_err)?;
    let d = PyDict::new(py);
    let level = match est.level {
        detector::AttenuationLevel::None => "NONE",
        detector::AttenuationLevel::Moderate => "MODERATE",
        detector::AttenuationLevel::Strong => "STRONG",
        detector::AttenuationLevel::Severe => "SEVERE",
    };
    d.set_item("level", level)?;
    d.set_item("metric_dbhz", est.metric_dbhz)?;
    d.set_item("deficit_db", est.deficit_db)?;
    Ok(d)
}

/// Incremental detection, one epoch at a time.
#[pyclass(name = "DetectionSession")]
struct PySession {
    state: Option<DetectionState>,
    config: detector::DetectorConfig,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (config=None, cadence_s=model::DEFAULT_CADENCE_S))]
    fn new(config: Option<&PyConfig>, cadence_s: f64) -> PyResult<Self> {
        let config = config_or_default(config);
        config.validate().map_err(detect_err)?;
        let state = DetectionState::new(cadence_s).map_err(detect_err)?;
        Ok(PySession { state: Some(state), config })
    }

    /// Feeds one epoch; returns the phase name.
    fn step(&mut self, epoch: &PyEpoch) -> PyResult<&'static str> {
        let state = self.state.take().expect("session state is always restored");
        match detector::online_step(state.clone(), &epoch.0, &self.config) {
            Ok(next) => {
                let phase = next.phase().name();
                self.state = Some(next);
                Ok(phase)
            }
            Err(e) => {
                self.state = Some(state);
                Err(detect_err(e))
            }
        }
    }

    #[getter]
    fn phase(&self) -> &'static str {
        self.state().phase().name()
    }
    #[getter]
    fn decision(&self) -> Option<u8> {
        match self.state().phase() {
            Phase::Decided(d) => Some(d),
            _ => None,
        }
    }
    #[getter]
    fn elapsed_s(&self) -> f64 {
        self.state().elapsed_s()
    }
}

impl PySession {
    fn state(&self) -> &DetectionState {
        self.state.as_ref().expect("session state is always restored")
    }
}

fn window(start_s: f64, duration_s: f64) -> PyResult<Window> {
    Window::new(start_s, duration_s).map_err(stats_err)
}

/// Pooled C/N0 statistics of the window `[start_s, start_s + duration_s)`.
#[pyfunction]
#[pyo3(signature = (series, start_s=100.0, duration_s=100.0))]
fn cn0_summary<'py>(
    py: Python<'py>,
    series: &PySeries,
    start_s: f64,
    duration_s: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = stats::cn0_summary(&series.0, &window(start_s, duration_s)?).map_err(stats_err)?;
    summary_dict(py, &s)
}

/// Statistics of per-epoch satellite counts; `which` is `available` or `used_in_fix`.
#[pyfunction]
#[pyo3(signature = (series, start_s=100.0, duration_s=100.0, which="available"))]
fn satcount_summary<'py>(
    py: Python<'py>,
    series: &PySeries,
    start_s: f64,
    duration_s: f64,
    which: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let which = match which {
        "available" => SatCount::Available,
        "used_in_fix" => SatCount::UsedInFix,
        other => return Err(invalid(format!("which must be available or used_in_fix, got `{other}`"))),
    };
    let s = stats::satcount_summary(&series.0, &window(start_s, duration_s)?, which)
        .map_err(stats_err)?;
    summary_dict(py, &s)
}

#[pyfunction]
#[pyo3(signature = (series, start_s=100.0, duration_s=100.0))]
fn distinct_satellites(series: &PySeries, start_s: f64, duration_s: f64) -> PyResult<usize> {
    Ok(stats::distinct_satellites(&series.0, &window(start_s, duration_s)?))
}

#[pyfunction]
fn time_to_first_fix(series: &PySeries) -> Option<f64> {
    stats::time_to_first_fix(&series.0)
}

/// Two-sample Kolmogorov-Smirnov distance.
#[pyfunction]
fn ks_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    let a = stats::Ecdf::new(&a).map_err(stats_err)?;
    let b = stats::Ecdf::new(&b).map_err(stats_err)?;
    Ok(stats::ks_distance(&a, &b))
}

fn dataset(attenuating: Vec<PySeries>, open: Vec<PySeries>) -> LabeledDataset {
    LabeledDataset::new(
        attenuating.into_iter().map(|s| s.0).collect(),
        open.into_iter().map(|s| s.0).collect(),
    )
}

/// Derives a threshold on `metric` and scores it on the same recordings.
#[pyfunction]
#[pyo3(signature = (attenuating, open, metric="max_cn0", config=None))]
fn calibrate<'py>(
    py: Python<'py>,
    attenuating: Vec<PySeries>,
    open: Vec<PySeries>,
    metric: &str,
    config: Option<&PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let family: CriterionFamily = metric.parse().map_err(invalid)?;
    let config = config_or_default(config);
    let data = dataset(attenuating, open);
    let r = cal::derive_threshold(&data, &config, family).map_err(calibrate_err)?;
    let eval = cal::evaluate_config(&data, &cal::calibrated_config(&config, &r))
        .map_err(detect_err)?;
    let d = PyDict::new(py);
    d.set_item("metric", family.name())?;
    d.set_item("threshold", r.threshold)?;
    d.set_item("margin", r.margin)?;
    d.set_item("separable", r.separable)?;
    d.set_item("ks", r.ks)?;
    let c = eval.confusion;
    d.set_item("tp", c.tp)?;
    d.set_item("fp", c.fp)?;
    d.set_item("tn", c.tn)?;
    d.set_item("fn", c.fn_)?;
    Ok(d)
}

/// Synthetic recording from a named preset.
#[pyfunction]
#[pyo3(signature = (preset, seed=1))]
fn synth_preset(preset: &str, seed: u64) -> PyResult<PySeries> {
    let p: Preset = preset.parse().map_err(invalid)?;
    synth::generate(&p.spec(seed)).map(PySeries).map_err(invalid)
}

/// Synthetic recording from a TOML scenario.
#[pyfunction]
fn synth_spec(spec_toml: &str) -> PyResult<PySeries> {
    let spec = ScenarioSpec::from_toml(spec_toml).map_err(invalid)?;
    synth::generate(&spec).map(PySeries).map_err(invalid)
}

/// TOML scenario of a preset, as a starting point for custom scenarios.
#[pyfunction]
#[pyo3(signature = (preset, seed=1))]
fn preset_spec(preset: &str, seed: u64) -> PyResult<String> {
    let p: Preset = preset.parse().map_err(invalid)?;
    Ok(p.spec(seed).to_toml())
}

#[pymodule]
pub fn gadetect(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("GadError", py.get_type::<GadError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("SeriesTooShortError", py.get_type::<SeriesTooShortError>())?;
    m.add("EmptyWindowError", py.get_type::<EmptyWindowError>())?;
    m.add_class::<PyObservation>()?;
    m.add_class::<PyEpoch>()?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(assess, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_attenuation, m)?)?;
    m.add_function(wrap_pyfunction!(cn0_summary, m)?)?;
    m.add_function(wrap_pyfunction!(satcount_summary, m)?)?;
    m.add_function(wrap_pyfunction!(distinct_satellites, m)?)?;
    m.add_function(wrap_pyfunction!(time_to_first_fix, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(synth_preset, m)?)?;
    m.add_function(wrap_pyfunction!(synth_spec, m)?)?;
    m.add_function(wrap_pyfunction!(preset_spec, m)?)?;
    Ok(())
}
