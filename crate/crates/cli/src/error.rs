use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use gad_core::calibrate::CalibrateError;
use gad_core::stats::StatsError;
use gad_core::synth::SynthError;
use gad_core::{DetectError, IngestError};

/// Failure classes of the CLI. Each maps to one exit code.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    EmptyWindow(String),
    TooShort(String),
    Invalid(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::EmptyWindow(_) => 3,
            CliError::TooShort(_) => 4,
            CliError::Invalid(_) => 5,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn parse(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Parse(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::EmptyWindow(m) => write!(f, "empty window: {m}"),
            CliError::TooShort(m) => write!(f, "series too short: {m}"),
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::SeriesTooShort { .. } => CliError::TooShort(e.to_string()),
            DetectError::InvalidConfig(_) => CliError::Invalid(e.to_string()),
            DetectError::OutOfOrderEpoch { .. } => CliError::Parse(e.to_string()),
        }
    }
}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        match e {
            CalibrateError::EmptyClass(_) => CliError::Invalid(e.to_string()),
            CalibrateError::Detect(d) => d.into(),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::EmptyWindow => CliError::EmptyWindow(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidCadence(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}
