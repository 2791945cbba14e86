use std::path::PathBuf;

use thiserror::Error;

use crate::edf::Electrode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncated file: need {expected} bytes, got {actual}")]
    TruncatedFile { expected: usize, actual: usize },

    #[error("malformed header field `{field}`: {value:?}")]
    MalformedField { field: &'static str, value: String },

    #[error("invalid calibration for signal {signal} ({label:?}): digital_max == digital_min or physical_max == physical_min")]
    InvalidCalibration { signal: usize, label: String },

    #[error("unknown electrode label {0:?}")]
    UnknownElectrode(String),

    #[error("missing channels: {}", format_electrodes(.0))]
    MissingChannels(Vec<Electrode>),

    #[error("recording too short: {duration_s:.3} s (need at least {required_s} s)")]
    TooShort { duration_s: f64, required_s: f64 },

    #[error("sampling rate {fs} Hz is below the {min} Hz minimum")]
    SamplingRateTooLow { fs: f64, min: f64 },

    #[error("EEG channels use different sampling rates ({0} Hz vs {1} Hz)")]
    MixedSamplingRates(f64, f64),

    #[error("window of {window} samples is shorter than one Welch segment ({segment})")]
    SegmentTooLong { window: usize, segment: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("manifest mismatch: expected {expected}, got {actual}")]
    ManifestMismatch { expected: String, actual: String },

    #[error("labels contain a single class")]
    DegenerateLabels,

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("no positive labels")]
    NoPositives,

    #[error("both classes are required, only one present")]
    SingleClass,

    #[error("too few patients: have {have}, need {need}")]
    TooFewPatients { have: usize, need: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("rank-deficient input: second principal component has zero variance")]
    DegenerateRank,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("cross-validation fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid data: {0}")]
    Data(String),
}

impl Error {
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through file and fold wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } | Error::Fold { source, .. } => source.root(),
            other => other,
        }
    }
}

fn format_electrodes(list: &[Electrode]) -> String {
    list.iter()
        .map(|e| e.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}
