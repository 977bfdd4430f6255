//! `gad`: detect attenuating environments from GNSS status logs.

mod error;
mod input;
mod report;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gad_core::calibrate::{
    calibrated_config, derive_threshold, evaluate_config, extract_metric, LabeledSeries,
};
use gad_core::detector::{
    assess, estimate_attenuation, online_step, AttenuationEstimate, Combine, Criterion,
    CriterionFamily, DetectionState, DetectorConfig,
};
use gad_core::ingest::{write_gad_csv, GadCsvStream};
use gad_core::model::{DEFAULT_CADENCE_S, SatelliteKey};
use gad_core::stats::{
    cn0_summary, distinct_satellites, satcount_summary, time_to_first_fix, SatCount, Window,
};
use gad_core::synth::{generate, Preset, ScenarioSpec};
use gad_core::{LabeledDataset, RawSeries};

use error::CliError;
use input::Format;
use report::{
    AttenuationDoc, CalibrateDoc, DetectReportDoc, SkippedDoc, StatsDoc, StreamStateDoc,
};

#[derive(Parser)]
#[command(name = "gad", version, about = "Detect attenuating environments from GNSS status logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an NMEA or GAD-CSV log to GAD-CSV.
    Convert {
        input: PathBuf,
        /// Output file, `-` for stdout.
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
        #[command(flatten)]
        read: ReadArgs,
    },
    /// Windowed C/N0 and satellite-count statistics as JSON.
    Stats {
        input: PathBuf,
        #[command(flatten)]
        read: ReadArgs,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        window_start: f64,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        window_dur: f64,
        /// Also write per-epoch `t, S, X, max C/N0` rows to this CSV file.
        #[arg(long)]
        per_epoch: Option<PathBuf>,
    },
    /// Decide whether a recording was made in an attenuating environment.
    Detect {
        /// Recording to analyse; ignored with --stream, which reads GAD-CSV from stdin.
        #[arg(required_unless_present = "stream")]
        input: Option<PathBuf>,
        #[command(flatten)]
        read: ReadArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Open-sky peak C/N0 used for the attenuation estimate.
        #[arg(long, allow_negative_numbers = true)]
        baseline: Option<f64>,
        /// Process GAD-CSV from stdin epoch by epoch and print a state line per epoch.
        #[arg(long)]
        stream: bool,
    },
    /// Derive a device-specific threshold from labelled recordings.
    Calibrate {
        /// Text file with one `att,<path>` or `open,<path>` per line.
        manifest: PathBuf,
        #[arg(long, default_value = "max-cn0")]
        metric: Metric,
        #[command(flatten)]
        read: ReadArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic recording.
    Synth {
        /// Named scenario.
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<String>,
        /// Scenario file in TOML.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file, `-` for stdout.
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ReadArgs {
    /// Input format; guessed from the content when omitted.
    #[arg(long)]
    format: Option<Format>,
    /// Receiver reporting interval in seconds.
    #[arg(long, default_value_t = DEFAULT_CADENCE_S)]
    cadence: f64,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML detector configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initialisation duration in seconds.
    #[arg(long, allow_negative_numbers = true)]
    d0: Option<f64>,
    /// Measurement duration in seconds.
    #[arg(long, allow_negative_numbers = true)]
    dm: Option<f64>,
    /// Attenuating if every epoch's peak C/N0 is at most this.
    #[arg(long, allow_negative_numbers = true)]
    max_cn0: Option<f64>,
    /// Attenuating if the mean C/N0 is below this.
    #[arg(long, allow_negative_numbers = true)]
    avg_cn0: Option<f64>,
    /// Attenuating if fewer distinct satellites are heard.
    #[arg(long)]
    min_sats: Option<u32>,
    /// Attenuating if fewer satellites are ever used in a fix.
    #[arg(long)]
    min_fix_sats: Option<u32>,
    #[arg(long)]
    combine: Option<CombineArg>,
    /// Ignore observations below this elevation in C/N0 criteria.
    #[arg(long, allow_negative_numbers = true)]
    elev_mask: Option<f64>,
    /// Satellites to ignore, e.g. `GPS:5,GLONASS:12`.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<SatelliteKey>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineArg {
    All,
    Any,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    MaxCn0,
    AvgCn0,
    DistinctSats,
    FixSats,
}

impl From<Metric> for CriterionFamily {
    fn from(m: Metric) -> Self {
        match m {
            Metric::MaxCn0 => CriterionFamily::MaxCn0,
            Metric::AvgCn0 => CriterionFamily::AvgCn0,
            Metric::DistinctSats => CriterionFamily::DistinctSats,
            Metric::FixSats => CriterionFamily::FixSats,
        }
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<DetectorConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = input::read_text(path)?;
                DetectorConfig::from_toml(&text)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
            }
            None => DetectorConfig::default(),
        };
        if let Some(d0) = self.d0 {
            config.init_duration_s = d0;
        }
        if let Some(dm) = self.dm {
            config.measure_duration_s = dm;
        }
        let criteria: Vec<Criterion> = [
            self.max_cn0.map(Criterion::MaxCn0Below),
            self.avg_cn0.map(Criterion::AvgCn0Below),
            self.min_sats.map(|n| Criterion::DistinctSatsBelow(n.into())),
            self.min_fix_sats.map(|n| Criterion::FixSatsBelow(n.into())),
        ]
        .into_iter()
        .flatten()
        .collect();
        if !criteria.is_empty() {
            config.criteria = criteria;
        }
        match self.combine {
            Some(CombineArg::All) => config.combine = Combine::All,
            Some(CombineArg::Any) => config.combine = Combine::Any,
            None => {}
        }
        if self.elev_mask.is_some() {
            config.elevation_mask_deg = self.elev_mask;
        }
        config.excluded.extend(self.exclude.iter().copied());
        config.validate()?;
        Ok(config)
    }

    /// Whether the thresholds in use came from the user rather than the defaults.
    fn customised(&self) -> bool {
        self.config.is_some()
            || self.max_cn0.is_some()
            || self.avg_cn0.is_some()
            || self.min_sats.is_some()
            || self.min_fix_sats.is_some()
    }
}

fn print_json(doc: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).expect("report documents serialize");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn cmd_convert(input: &Path, output: &Path, read: &ReadArgs) -> Result<(), CliError> {
    let series = input::load(input, read.format, read.cadence)?;
    input::write_file(output, &write_gad_csv(&series))?;
    eprintln!("{}: {} epochs converted", input.display(), series.len());
    Ok(())
}

fn per_epoch_csv(series: &RawSeries) -> String {
    let mut out = String::from("t_s,sats_available,sats_used_in_fix,max_cn0_dbhz\n");
    for (t, e) in series.relative() {
        let peak = e.max_cn0().map(|c| format!("{c:.1}")).unwrap_or_default();
        out.push_str(&format!("{t:.3},{},{},{peak}\n", e.satellite_count(), e.fix_count()));
    }
    out
}

fn cmd_stats(
    input: &Path,
    read: &ReadArgs,
    window: (f64, f64),
    per_epoch: Option<&Path>,
) -> Result<(), CliError> {
    let series = input::load(input, read.format, read.cadence)?;
    let w = Window::new(window.0, window.1)?;
    if let Some(path) = per_epoch {
        input::write_file(path, &per_epoch_csv(&series))?;
    }
    let available = satcount_summary(&series, &w, SatCount::Available)?;
    let doc = StatsDoc {
        input: input.display().to_string(),
        epochs: series.len(),
        window: (&w).into(),
        window_epochs: available.n,
        cn0_dbhz: cn0_summary(&series, &w).ok(),
        satellites_available: available,
        satellites_used_in_fix: satcount_summary(&series, &w, SatCount::UsedInFix)?,
        distinct_satellites: distinct_satellites(&series, &w),
        ttff_s: time_to_first_fix(&series),
    };
    print_json(&doc)
}

fn attenuation_doc(baseline: Option<f64>, estimate: impl FnOnce(f64) -> Result<AttenuationEstimate, CliError>) -> Result<Option<AttenuationDoc>, CliError> {
    baseline
        .map(|b| Ok(AttenuationDoc { baseline_dbhz: b, estimate: estimate(b)? }))
        .transpose()
}

fn cmd_detect(
    input: &Path,
    read: &ReadArgs,
    args: &ConfigArgs,
    baseline: Option<f64>,
) -> Result<(), CliError> {
    let config = args.resolve()?;
    let series = input::load(input, read.format, read.cadence)?;
    let assessment = assess(&series, &config)?;
    let attenuation =
        attenuation_doc(baseline, |b| Ok(estimate_attenuation(&series, &config, b)?))?;
    let doc = DetectReportDoc::new(
        input.display().to_string(),
        &config,
        args.customised(),
        &assessment,
        time_to_first_fix(&series),
        attenuation,
    );
    print_json(&doc)
}

/// Online detection over GAD-CSV read line by line from stdin.
fn cmd_detect_stream(read: &ReadArgs, args: &ConfigArgs, baseline: Option<f64>) -> Result<(), CliError> {
    if read.format == Some(Format::Nmea) {
        return Err(CliError::Invalid("--stream reads GAD-CSV only".into()));
    }
    let config = args.resolve()?;
    let stdin_path = Path::new("-");
    let mut stream = GadCsvStream::new(read.cadence)?;
    let mut state = DetectionState::new(read.cadence)?;
    let mut first_t = None;
    let mut ttff = None;
    let mut out = std::io::stdout().lock();

    let mut feed = |epoch: gad_core::Epoch, state: DetectionState| -> Result<DetectionState, CliError> {
        let t0 = *first_t.get_or_insert(epoch.timestamp_s());
        if ttff.is_none() && epoch.fix_count() > 0 {
            ttff = Some(epoch.timestamp_s() - t0);
        }
        let state = online_step(state, &epoch, &config)?;
        let line = StreamStateDoc {
            t_s: epoch.timestamp_s(),
            elapsed_s: state.elapsed_s(),
            phase: state.phase().name(),
            decision: state.decision(),
        };
        let json = serde_json::to_string(&line).expect("state lines serialize");
        writeln!(out, "{json}").map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        Ok(state)
    };

    for line in std::io::stdin().lock().lines() {
        let line = line.map_err(|e| CliError::io(stdin_path, e))?;
        if let Some(epoch) = stream.push_line(&line).map_err(|e| CliError::parse(stdin_path, e))? {
            state = feed(epoch, state)?;
        }
    }
    if let Some(epoch) = stream.finish().map_err(|e| CliError::parse(stdin_path, e))? {
        state = feed(epoch, state)?;
    }
    if first_t.is_none() {
        return Err(CliError::parse(stdin_path, "no valid records"));
    }
    let Some(assessment) = state.assessment() else {
        return Err(CliError::TooShort(format!(
            "stream covered {} s, need {} s",
            state.elapsed_s(),
            config.required_span_s()
        )));
    };
    let attenuation = attenuation_doc(baseline, |b| {
        let metric_dbhz = assessment.evidence.mean_peak_cn0();
        let deficit_db = b - metric_dbhz;
        Ok(AttenuationEstimate {
            level: config.attenuation_steps.classify(deficit_db),
            metric_dbhz,
            deficit_db,
        })
    })?;
    let doc = DetectReportDoc::new("-".into(), &config, args.customised(), assessment, ttff, attenuation);
    print_json(&doc)
}

struct ManifestEntry {
    attenuating: bool,
    path: PathBuf,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let text = input::read_text(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| CliError::parse(path, format!("line {}: {m}", i + 1));
        let (label, file) = line.split_once(',').ok_or_else(|| bad("expected `label,path`"))?;
        let attenuating = match label.trim() {
            "att" => true,
            "open" => false,
            other => return Err(bad(&format!("unknown label `{other}`, expected att or open"))),
        };
        let file = PathBuf::from(file.trim());
        let path = if file.is_absolute() { file } else { base.join(file) };
        entries.push(ManifestEntry { attenuating, path });
    }
    Ok(entries)
}

fn cmd_calibrate(manifest: &Path, metric: Metric, read: &ReadArgs, args: &ConfigArgs) -> Result<(), CliError> {
    let config = args.resolve()?;
    let family = CriterionFamily::from(metric);
    let entries = read_manifest(manifest)?;
    // parse every listed file concurrently; results keep manifest order
    let loaded: Vec<Result<RawSeries, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .iter()
            .map(|e| scope.spawn(|| input::load(&e.path, read.format, read.cadence)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("loader thread panicked")).collect()
    });

    let mut data = LabeledDataset::default();
    let mut skipped = Vec::new();
    for (entry, series) in entries.iter().zip(loaded) {
        let series = series?;
        let label = if entry.attenuating { "att" } else { "open" };
        // recordings too short for the window cannot contribute a metric
        if let Err(e) = extract_metric(&series, &config, family) {
            match CliError::from(e) {
                CliError::TooShort(reason) => {
                    eprintln!("{}: skipped, {reason}", entry.path.display());
                    skipped.push(SkippedDoc { label, path: entry.path.display().to_string(), reason });
                    continue;
                }
                other => return Err(other),
            }
        }
        let labeled = LabeledSeries { series, location: Some(entry.path.display().to_string()) };
        if entry.attenuating {
            data.attenuating.push(labeled);
        } else {
            data.open.push(labeled);
        }
    }

    let result = derive_threshold(&data, &config, family)?;
    let metrics = |class: &[LabeledSeries]| -> Result<Vec<f64>, CliError> {
        class.iter().map(|s| Ok(extract_metric(&s.series, &config, family)?)).collect()
    };
    let metrics = (metrics(&data.attenuating)?, metrics(&data.open)?);
    let evaluation = evaluate_config(&data, &calibrated_config(&config, &result))?;
    let doc = CalibrateDoc::new(manifest.display().to_string(), &result, metrics, &evaluation, skipped);
    print_json(&doc)
}

fn cmd_synth(preset: Option<&str>, spec: Option<&Path>, seed: Option<u64>, output: &Path) -> Result<(), CliError> {
    let mut spec = match (preset, spec) {
        (Some(name), _) => name.parse::<Preset>()?.spec(1),
        (None, Some(path)) => ScenarioSpec::from_toml(&input::read_text(path)?)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?,
        (None, None) => return Err(CliError::Invalid("give --preset or --spec".into())),
    };
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    let series = generate(&spec)?;
    input::write_file(output, &write_gad_csv(&series))?;
    // the resolved spec is the report; keep stdout clean when it carries the data
    if output == Path::new("-") {
        eprint!("{}", spec.to_toml());
    } else {
        print!("{}", spec.to_toml());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Convert { input, output, read } => cmd_convert(&input, &output, &read),
        Command::Stats { input, read, window_start, window_dur, per_epoch } => {
            cmd_stats(&input, &read, (window_start, window_dur), per_epoch.as_deref())
        }
        Command::Detect { input, read, config, baseline, stream } => {
            if stream {
                cmd_detect_stream(&read, &config, baseline)
            } else {
                let input = input.expect("clap requires an input without --stream");
                cmd_detect(&input, &read, &config, baseline)
            }
        }
        Command::Calibrate { manifest, metric, read, config } => {
            cmd_calibrate(&manifest, metric, &read, &config)
        }
        Command::Synth { preset, spec, seed, output } => {
            cmd_synth(preset.as_deref(), spec.as_deref(), seed, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return CliError::Invalid(String::new()).exit_code();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gad: {e}");
            e.exit_code()
        }
    }
}
