//! EDF reading and writing, electrode label normalization, and recording
//! validation.
//!
//! Layout: a 256-byte fixed header, then 256 bytes per signal stored
//! field-major (all labels, then all transducers, ...), then data records.
//! Each record holds `samples_per_record` 16-bit little-endian two's-complement
//! samples for every signal in header order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIXED_HEADER_BYTES: usize = 256;
pub const SIGNAL_HEADER_BYTES: usize = 256;
/// Below this rate the gamma band (up to 45 Hz) would exceed Nyquist.
pub const MIN_SAMPLING_RATE_HZ: f64 = 96.0;
pub const ANNOTATION_LABEL: &str = "EDF Annotations";

/// Electrodes of the international 10–20 system, using the classic
/// temporal/parietal names (T3/T4/T5/T6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Electrode {
    Fp1,
    Fp2,
    Fpz,
    F7,
    F3,
    Fz,
    F4,
    F8,
    T3,
    C3,
    Cz,
    C4,
    T4,
    T5,
    P3,
    Pz,
    P4,
    T6,
    O1,
    Oz,
    O2,
    A1,
    A2,
}

impl Electrode {
    pub const ALL: [Electrode; 23] = [
        Electrode::Fp1,
        Electrode::Fp2,
        Electrode::Fpz,
        Electrode::F7,
        Electrode::F3,
        Electrode::Fz,
        Electrode::F4,
        Electrode::F8,
        Electrode::T3,
        Electrode::C3,
        Electrode::Cz,
        Electrode::C4,
        Electrode::T4,
        Electrode::T5,
        Electrode::P3,
        Electrode::Pz,
        Electrode::P4,
        Electrode::T6,
        Electrode::O1,
        Electrode::Oz,
        Electrode::O2,
        Electrode::A1,
        Electrode::A2,
    ];

    /// The 19 scalp electrodes a complete routine recording carries.
    pub const STANDARD_19: [Electrode; 19] = [
        Electrode::Fp1,
        Electrode::Fp2,
        Electrode::F7,
        Electrode::F3,
        Electrode::Fz,
        Electrode::F4,
        Electrode::F8,
        Electrode::T3,
        Electrode::C3,
        Electrode::Cz,
        Electrode::C4,
        Electrode::T4,
        Electrode::T5,
        Electrode::P3,
        Electrode::Pz,
        Electrode::P4,
        Electrode::T6,
        Electrode::O1,
        Electrode::O2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Electrode::Fp1 => "FP1",
            Electrode::Fp2 => "FP2",
            Electrode::Fpz => "FPZ",
            Electrode::F7 => "F7",
            Electrode::F3 => "F3",
            Electrode::Fz => "FZ",
            Electrode::F4 => "F4",
            Electrode::F8 => "F8",
            Electrode::T3 => "T3",
            Electrode::C3 => "C3",
            Electrode::Cz => "CZ",
            Electrode::C4 => "C4",
            Electrode::T4 => "T4",
            Electrode::T5 => "T5",
            Electrode::P3 => "P3",
            Electrode::Pz => "PZ",
            Electrode::P4 => "P4",
            Electrode::T6 => "T6",
            Electrode::O1 => "O1",
            Electrode::Oz => "OZ",
            Electrode::O2 => "O2",
            Electrode::A1 => "A1",
            Electrode::A2 => "A2",
        }
    }
}

impl fmt::Display for Electrode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Electrode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        normalize_electrode_label(s)
    }
}

/// Maps a raw EDF label such as `"EEG FP1-REF"` or `"T7"` onto the 10–20
/// vocabulary.
pub fn normalize_electrode_label(raw: &str) -> Result<Electrode> {
    let mut name = raw.trim().to_ascii_uppercase();
    if let Some(rest) = name.strip_prefix("EEG ") {
        name = rest.trim_start().to_string();
    }
    for suffix in ["-REF", "-LE", "-AVG"] {
        if let Some(rest) = name.strip_suffix(suffix) {
            name = rest.trim_end().to_string();
            break;
        }
    }
    let name = match name.as_str() {
        "T7" => "T3",
        "T8" => "T4",
        "P7" => "T5",
        "P8" => "T6",
        other => other,
    };
    Electrode::ALL
        .iter()
        .copied()
        .find(|e| e.as_str() == name)
        .ok_or_else(|| Error::UnknownElectrode(raw.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdfHeader {
    pub version: String,
    pub patient_info: String,
    pub recording_info: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub reserved: String,
    /// `None` when the file declares `-1` (unknown, e.g. still recording).
    pub num_data_records: Option<usize>,
    pub record_duration_s: f64,
    pub num_signals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dim: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalHeader {
    pub fn is_annotation(&self) -> bool {
        self.label.trim() == ANNOTATION_LABEL
    }

    /// One digital step expressed in physical units.
    pub fn quantization_step(&self) -> f64 {
        (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
    }

    /// Affine digital-to-physical map. Values outside the digital range are
    /// clamped to it first.
    pub fn to_physical(&self, digital: i32) -> f64 {
        let d = digital.clamp(self.digital_min, self.digital_max);
        f64::from(d - self.digital_min) * (self.physical_max - self.physical_min)
            / f64::from(self.digital_max - self.digital_min)
            + self.physical_min
    }

    pub fn is_out_of_range(&self, digital: i32) -> bool {
        digital < self.digital_min || digital > self.digital_max
    }

    /// Multiplier from the declared physical dimension to microvolts.
    pub fn microvolt_scale(&self) -> f64 {
        match self.physical_dim.trim() {
            "mV" | "MV" => 1e3,
            "V" => 1e6,
            "nV" | "NV" => 1e-3,
            _ => 1.0,
        }
    }

    pub fn sampling_rate(&self, record_duration_s: f64) -> f64 {
        self.samples_per_record as f64 / record_duration_s
    }
}

/// Free-function form of [`SignalHeader::to_physical`].
pub fn to_physical(digital: i32, sh: &SignalHeader) -> f64 {
    sh.to_physical(digital)
}

/// A decoded EDF file with raw digital samples, one vector per signal.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfFile {
    pub header: EdfHeader,
    pub signals: Vec<SignalHeader>,
    pub samples: Vec<Vec<i16>>,
}

struct FieldReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> FieldReader<'a> {
    fn text(&mut self, width: usize) -> String {
        let raw = &self.bytes[self.pos..self.pos + width];
        self.pos += width;
        String::from_utf8_lossy(raw)
            .trim_end_matches(['\0', ' '])
            .trim_start()
            .to_string()
    }

    fn number<T: FromStr>(&mut self, width: usize, field: &'static str) -> Result<T> {
        let value = self.text(width);
        value
            .parse::<T>()
            .map_err(|_| Error::MalformedField { field, value })
    }
}

/// Decodes an EDF byte stream.
pub fn parse_edf(bytes: &[u8]) -> Result<EdfFile> {
    if bytes.len() < FIXED_HEADER_BYTES {
        return Err(Error::TruncatedFile {
            expected: FIXED_HEADER_BYTES,
            actual: bytes.len(),
        });
    }
    let mut r = FieldReader { bytes, pos: 0 };
    let version = r.text(8);
    let patient_info = r.text(80);
    let recording_info = r.text(80);
    let start_date = r.text(8);
    let start_time = r.text(8);
    let header_bytes: usize = r.number(8, "header_bytes")?;
    let reserved = r.text(44);
    let num_records: i64 = r.number(8, "num_data_records")?;
    let record_duration_s: f64 = r.number(8, "record_duration")?;
    let num_signals: usize = r.number(4, "num_signals")?;

    if num_signals == 0 {
        return Err(Error::MalformedField {
            field: "num_signals",
            value: "0".into(),
        });
    }
    if !(record_duration_s.is_finite() && record_duration_s > 0.0) {
        return Err(Error::MalformedField {
            field: "record_duration",
            value: record_duration_s.to_string(),
        });
    }
    let expected_header = FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * num_signals;
    if header_bytes != expected_header {
        return Err(Error::MalformedField {
            field: "header_bytes",
            value: header_bytes.to_string(),
        });
    }
    if bytes.len() < expected_header {
        return Err(Error::TruncatedFile {
            expected: expected_header,
            actual: bytes.len(),
        });
    }
    let num_data_records = match num_records {
        -1 => None,
        n if n >= 0 => Some(n as usize),
        n => {
            return Err(Error::MalformedField {
                field: "num_data_records",
                value: n.to_string(),
            })
        }
    };

    let ns = num_signals;
    let texts = |r: &mut FieldReader, width| (0..ns).map(|_| r.text(width)).collect::<Vec<_>>();
    let labels = texts(&mut r, 16);
    let transducers = texts(&mut r, 80);
    let dims = texts(&mut r, 8);
    let mut phys_min = Vec::with_capacity(ns);
    for _ in 0..ns {
        phys_min.push(r.number::<f64>(8, "physical_min")?);
    }
    let mut phys_max = Vec::with_capacity(ns);
    for _ in 0..ns {
        phys_max.push(r.number::<f64>(8, "physical_max")?);
    }
    let mut dig_min = Vec::with_capacity(ns);
    for _ in 0..ns {
        dig_min.push(r.number::<i32>(8, "digital_min")?);
    }
    let mut dig_max = Vec::with_capacity(ns);
    for _ in 0..ns {
        dig_max.push(r.number::<i32>(8, "digital_max")?);
    }
    let prefilters = texts(&mut r, 80);
    let mut spr = Vec::with_capacity(ns);
    for _ in 0..ns {
        spr.push(r.number::<usize>(8, "samples_per_record")?);
    }
    let reserved_sig = texts(&mut r, 32);

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let sh = SignalHeader {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dim: dims[i].clone(),
            physical_min: phys_min[i],
            physical_max: phys_max[i],
            digital_min: dig_min[i],
            digital_max: dig_max[i],
            prefiltering: prefilters[i].clone(),
            samples_per_record: spr[i],
            reserved: reserved_sig[i].clone(),
        };
        if sh.samples_per_record == 0 {
            return Err(Error::MalformedField {
                field: "samples_per_record",
                value: "0".into(),
            });
        }
        if !sh.is_annotation()
            && (sh.digital_max <= sh.digital_min || sh.physical_max == sh.physical_min)
        {
            return Err(Error::InvalidCalibration {
                signal: i,
                label: sh.label,
            });
        }
        signals.push(sh);
    }

    let record_bytes: usize = signals.iter().map(|s| s.samples_per_record * 2).sum();
    let payload = bytes.len() - header_bytes;
    let n_records = match num_data_records {
        Some(n) => {
            let needed = header_bytes + n * record_bytes;
            if bytes.len() < needed {
                return Err(Error::TruncatedFile {
                    expected: needed,
                    actual: bytes.len(),
                });
            }
            n
        }
        None => payload / record_bytes,
    };

    let mut samples: Vec<Vec<i16>> = signals
        .iter()
        .map(|s| Vec::with_capacity(s.samples_per_record * n_records))
        .collect();
    let mut pos = header_bytes;
    for _ in 0..n_records {
        for (sig, out) in signals.iter().zip(samples.iter_mut()) {
            let chunk = &bytes[pos..pos + sig.samples_per_record * 2];
            out.extend(
                chunk
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]])),
            );
            pos += chunk.len();
        }
    }

    Ok(EdfFile {
        header: EdfHeader {
            version,
            patient_info,
            recording_info,
            start_date,
            start_time,
            header_bytes,
            reserved,
            num_data_records,
            record_duration_s,
            num_signals,
        },
        signals,
        samples,
    })
}

fn put_field(out: &mut Vec<u8>, value: &str, width: usize) {
    let bytes = value.as_bytes();
    let n = bytes.len().min(width);
    out.extend_from_slice(&bytes[..n]);
    out.extend(std::iter::repeat_n(b' ', width - n));
}

/// Formats a number into at most `width` ASCII characters.
fn format_number(value: f64, width: usize) -> String {
    if value.fract() == 0.0 && value.abs() < 1e15 {
        let s = format!("{}", value as i64);
        if s.len() <= width {
            return s;
        }
    }
    let s = format!("{value}");
    if s.len() <= width {
        return s;
    }
    for precision in (0..width).rev() {
        let s = format!("{value:.precision$}");
        if s.len() <= width {
            return s;
        }
    }
    s[..width].to_string()
}

impl EdfFile {
    /// Number of complete data records actually present.
    pub fn record_count(&self) -> usize {
        match (self.signals.first(), self.samples.first()) {
            (Some(s), Some(v)) => v.len() / s.samples_per_record,
            _ => 0,
        }
    }

    /// Serializes back to EDF bytes. The record count field is written from
    /// the header (`-1` when unknown).
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let ns = self.signals.len();
        let n_records = self.record_count();
        let record_bytes: usize = self.signals.iter().map(|s| s.samples_per_record * 2).sum();
        let mut out = Vec::with_capacity(
            FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * ns + n_records * record_bytes,
        );
        put_field(&mut out, &h.version, 8);
        put_field(&mut out, &h.patient_info, 80);
        put_field(&mut out, &h.recording_info, 80);
        put_field(&mut out, &h.start_date, 8);
        put_field(&mut out, &h.start_time, 8);
        put_field(&mut out, &(FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * ns).to_string(), 8);
        put_field(&mut out, &h.reserved, 44);
        let count = h
            .num_data_records
            .map_or_else(|| "-1".to_string(), |n| n.to_string());
        put_field(&mut out, &count, 8);
        put_field(&mut out, &format_number(h.record_duration_s, 8), 8);
        put_field(&mut out, &ns.to_string(), 4);

        for s in &self.signals {
            put_field(&mut out, &s.label, 16);
        }
        for s in &self.signals {
            put_field(&mut out, &s.transducer, 80);
        }
        for s in &self.signals {
            put_field(&mut out, &s.physical_dim, 8);
        }
        for s in &self.signals {
            put_field(&mut out, &format_number(s.physical_min, 8), 8);
        }
        for s in &self.signals {
            put_field(&mut out, &format_number(s.physical_max, 8), 8);
        }
        for s in &self.signals {
            put_field(&mut out, &s.digital_min.to_string(), 8);
        }
        for s in &self.signals {
            put_field(&mut out, &s.digital_max.to_string(), 8);
        }
        for s in &self.signals {
            put_field(&mut out, &s.prefiltering, 80);
        }
        for s in &self.signals {
            put_field(&mut out, &s.samples_per_record.to_string(), 8);
        }
        for s in &self.signals {
            put_field(&mut out, &s.reserved, 32);
        }

        for rec in 0..n_records {
            for (s, data) in self.signals.iter().zip(&self.samples) {
                let start = rec * s.samples_per_record;
                for v in &data[start..start + s.samples_per_record] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    /// Converts recognized EEG electrodes to a physical-unit [`Recording`].
    ///
    /// Annotation signals are skipped by label; labels outside the 10–20
    /// vocabulary and repeated electrodes are dropped and reported.
    pub fn to_recording(
        &self,
        patient_id: &str,
        session_id: &str,
    ) -> Result<(Recording, IngestReport)> {
        let mut report = IngestReport::default();
        let mut channels: Vec<Channel> = Vec::new();
        let mut fs: Option<f64> = None;
        for (sig, data) in self.signals.iter().zip(&self.samples) {
            if sig.is_annotation() {
                report.annotation_signals += 1;
                continue;
            }
            let electrode = match normalize_electrode_label(&sig.label) {
                Ok(e) => e,
                Err(_) => {
                    report.dropped_labels.push(sig.label.clone());
                    continue;
                }
            };
            if channels.iter().any(|c| c.electrode == electrode) {
                report.dropped_labels.push(sig.label.clone());
                continue;
            }
            let rate = sig.sampling_rate(self.header.record_duration_s);
            match fs {
                None => fs = Some(rate),
                Some(f) if (f - rate).abs() > 1e-9 => return Err(Error::MixedSamplingRates(f, rate)),
                Some(_) => {}
            }
            let scale = sig.microvolt_scale();
            let mut clamped = 0usize;
            let samples = data
                .iter()
                .map(|&d| {
                    let d = i32::from(d);
                    if sig.is_out_of_range(d) {
                        clamped += 1;
                    }
                    sig.to_physical(d) * scale
                })
                .collect();
            if clamped > 0 {
                report.clamped_samples.push((electrode, clamped));
            }
            channels.push(Channel {
                electrode,
                samples,
            });
        }
        let Some(fs) = fs else {
            return Err(Error::MissingChannels(Electrode::STANDARD_19.to_vec()));
        };
        if fs < MIN_SAMPLING_RATE_HZ {
            return Err(Error::SamplingRateTooLow {
                fs,
                min: MIN_SAMPLING_RATE_HZ,
            });
        }
        let recording = Recording::new(patient_id, session_id, fs, channels)?;
        Ok((recording, report))
    }
}

/// Side information gathered while converting an [`EdfFile`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub dropped_labels: Vec<String>,
    pub annotation_signals: usize,
    /// Per electrode, the number of samples clamped into the digital range.
    pub clamped_samples: Vec<(Electrode, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub electrode: Electrode,
    /// Samples in microvolts.
    pub samples: Vec<f64>,
}

/// Multichannel referential EEG in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    patient_id: String,
    session_id: String,
    fs: f64,
    channels: Vec<Channel>,
}

impl Recording {
    pub fn new(
        patient_id: impl Into<String>,
        session_id: impl Into<String>,
        fs: f64,
        channels: Vec<Channel>,
    ) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidConfig(format!("sampling rate {fs}")));
        }
        if let Some(first) = channels.first() {
            for c in &channels {
                if c.samples.len() != first.samples.len() {
                    return Err(Error::LengthMismatch {
                        left: first.samples.len(),
                        right: c.samples.len(),
                    });
                }
            }
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].iter().any(|o| o.electrode == c.electrode) {
                return Err(Error::InvalidConfig(format!(
                    "electrode {} appears twice",
                    c.electrode
                )));
            }
        }
        Ok(Self {
            patient_id: patient_id.into(),
            session_id: session_id.into(),
            fs,
            channels,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, |c| c.samples.len())
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    pub fn channel(&self, electrode: Electrode) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.electrode == electrode)
            .map(|c| c.samples.as_slice())
    }

    pub fn electrodes(&self) -> impl Iterator<Item = Electrode> + '_ {
        self.channels.iter().map(|c| c.electrode)
    }
}

/// Accepts a recording only if every `required` electrode is present and it
/// lasts at least `min_duration_s`. Extra channels are allowed.
pub fn validate_recording(
    recording: Recording,
    required: &[Electrode],
    min_duration_s: f64,
) -> Result<Recording> {
    let missing: Vec<Electrode> = required
        .iter()
        .copied()
        .filter(|&e| recording.channel(e).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingChannels(missing));
    }
    let duration_s = recording.duration_s();
    if duration_s < min_duration_s {
        return Err(Error::TooShort {
            duration_s,
            required_s: min_duration_s,
        });
    }
    Ok(recording)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfWriteOptions {
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub record_duration_s: f64,
    pub start_date: String,
    pub start_time: String,
}

impl Default for EdfWriteOptions {
    fn default() -> Self {
        Self {
            physical_min: -500.0,
            physical_max: 500.0,
            digital_min: -32767,
            digital_max: 32767,
            record_duration_s: 1.0,
            start_date: "01.01.26".into(),
            start_time: "00.00.00".into(),
        }
    }
}

/// Quantizes a recording into an [`EdfFile`]. The sample count must be a
/// whole number of records.
pub fn recording_to_edf(recording: &Recording, opts: &EdfWriteOptions) -> Result<EdfFile> {
    let spr_f = recording.fs() * opts.record_duration_s;
    let spr = spr_f.round() as usize;
    if spr == 0 || (spr_f - spr as f64).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "fs {} x record duration {} is not a whole sample count",
            recording.fs(),
            opts.record_duration_s
        )));
    }
    if !recording.n_samples().is_multiple_of(spr) {
        return Err(Error::InvalidConfig(format!(
            "{} samples is not a multiple of {spr} samples per record",
            recording.n_samples()
        )));
    }
    if opts.digital_max <= opts.digital_min || opts.physical_max == opts.physical_min {
        return Err(Error::InvalidCalibration {
            signal: 0,
            label: String::new(),
        });
    }
    let n_records = recording.n_samples() / spr;
    let dig_span = f64::from(opts.digital_max - opts.digital_min);
    let phys_span = opts.physical_max - opts.physical_min;
    let mut signals = Vec::new();
    let mut samples = Vec::new();
    for ch in recording.channels() {
        signals.push(SignalHeader {
            label: format!("EEG {}-REF", ch.electrode),
            transducer: "AgAgCl electrode".into(),
            physical_dim: "uV".into(),
            physical_min: opts.physical_min,
            physical_max: opts.physical_max,
            digital_min: opts.digital_min,
            digital_max: opts.digital_max,
            prefiltering: String::new(),
            samples_per_record: spr,
            reserved: String::new(),
        });
        samples.push(
            ch.samples
                .iter()
                .map(|&x| {
                    let d = ((x - opts.physical_min) / phys_span * dig_span
                        + f64::from(opts.digital_min))
                    .round();
                    d.clamp(f64::from(opts.digital_min), f64::from(opts.digital_max)) as i16
                })
                .collect(),
        );
    }
    Ok(EdfFile {
        header: EdfHeader {
            version: "0".into(),
            patient_info: format!("{} X X X", recording.patient_id()),
            recording_info: format!("Startdate X X X {}", recording.session_id()),
            start_date: opts.start_date.clone(),
            start_time: opts.start_time.clone(),
            header_bytes: FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * signals.len(),
            reserved: String::new(),
            num_data_records: Some(n_records),
            record_duration_s: opts.record_duration_s,
            num_signals: signals.len(),
        },
        signals,
        samples,
    })
}

/// Writes a recording as EDF bytes.
pub fn write_edf(recording: &Recording, opts: &EdfWriteOptions) -> Result<Vec<u8>> {
    Ok(recording_to_edf(recording, opts)?.to_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(dmin: i32, dmax: i32, pmin: f64, pmax: f64) -> SignalHeader {
        SignalHeader {
            label: "EEG FP1-REF".into(),
            transducer: String::new(),
            physical_dim: "uV".into(),
            physical_min: pmin,
            physical_max: pmax,
            digital_min: dmin,
            digital_max: dmax,
            prefiltering: String::new(),
            samples_per_record: 4,
            reserved: String::new(),
        }
    }

    fn recording(electrodes: &[Electrode], fs: f64, n: usize) -> Recording {
        let channels = electrodes
            .iter()
            .enumerate()
            .map(|(i, &e)| Channel {
                electrode: e,
                samples: (0..n).map(|t| ((t * 7 + i * 13) % 101) as f64 - 50.0).collect(),
            })
            .collect();
        Recording::new("P1", "S1", fs, channels).unwrap()
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_electrode_label("EEG FP1-REF").unwrap(), Electrode::Fp1);
        assert_eq!(normalize_electrode_label("T7").unwrap(), Electrode::T3);
        assert_eq!(normalize_electrode_label("t8-le").unwrap(), Electrode::T4);
        assert_eq!(normalize_electrode_label("EEG P7-AVG").unwrap(), Electrode::T5);
        assert_eq!(normalize_electrode_label("P8").unwrap(), Electrode::T6);
        assert_eq!(normalize_electrode_label(" Cz ").unwrap(), Electrode::Cz);
        assert!(matches!(
            normalize_electrode_label("ECG"),
            Err(Error::UnknownElectrode(s)) if s == "ECG"
        ));
    }

    #[test]
    fn to_physical_endpoints_and_midpoint() {
        let sh = signal(-32768, 32767, -3276.8, 3276.7);
        assert_eq!(sh.to_physical(-32768), -3276.8);
        assert!((sh.to_physical(32767) - 3276.7).abs() < 1e-9);
        let sh = signal(-100, 100, -50.0, 150.0);
        assert_eq!(sh.to_physical(0), 50.0);
        // clamping
        assert_eq!(sh.to_physical(1000), 150.0);
        assert!(sh.is_out_of_range(-101));
    }

    #[test]
    fn truncated_stream() {
        assert!(matches!(
            parse_edf(&[b' '; 100]),
            Err(Error::TruncatedFile { expected: 256, actual: 100 })
        ));
    }

    #[test]
    fn unknown_record_count_is_inferred() {
        let rec = recording(&Electrode::STANDARD_19, 128.0, 128 * 3);
        let mut edf = recording_to_edf(&rec, &EdfWriteOptions::default()).unwrap();
        edf.header.num_data_records = None;
        let bytes = edf.to_bytes();
        assert_eq!(&bytes[236..244], b"-1      ");
        let parsed = parse_edf(&bytes).unwrap();
        assert_eq!(parsed.header.num_data_records, None);
        assert_eq!(parsed.record_count(), 3);
        assert_eq!(parsed.samples, edf.samples);
    }

    #[test]
    fn declared_records_beyond_payload_is_truncation() {
        let rec = recording(&Electrode::STANDARD_19, 128.0, 128 * 2);
        let bytes = write_edf(&rec, &EdfWriteOptions::default()).unwrap();
        let short = &bytes[..bytes.len() - 10];
        assert!(matches!(parse_edf(short), Err(Error::TruncatedFile { .. })));
    }

    #[test]
    fn malformed_numeric_field() {
        let rec = recording(&[Electrode::Fp1], 128.0, 128);
        let mut bytes = write_edf(&rec, &EdfWriteOptions::default()).unwrap();
        bytes[252..256].copy_from_slice(b"x   ");
        assert!(matches!(
            parse_edf(&bytes),
            Err(Error::MalformedField { field: "num_signals", .. })
        ));
    }

    #[test]
    fn invalid_calibration() {
        let rec = recording(&[Electrode::Fp1], 128.0, 128);
        let mut edf = recording_to_edf(&rec, &EdfWriteOptions::default()).unwrap();
        edf.signals[0].digital_max = edf.signals[0].digital_min;
        assert!(matches!(
            parse_edf(&edf.to_bytes()),
            Err(Error::InvalidCalibration { signal: 0, .. })
        ));
    }

    #[test]
    fn header_round_trip() {
        let rec = recording(&Electrode::STANDARD_19, 256.0, 256 * 2);
        let edf = recording_to_edf(&rec, &EdfWriteOptions::default()).unwrap();
        let parsed = parse_edf(&edf.to_bytes()).unwrap();
        assert_eq!(parsed, edf);
    }

    #[test]
    fn annotation_and_unknown_signals_are_skipped() {
        let rec = recording(&[Electrode::Fp1, Electrode::O2], 128.0, 128);
        let mut edf = recording_to_edf(&rec, &EdfWriteOptions::default()).unwrap();
        let mut ecg = edf.signals[0].clone();
        ecg.label = "ECG".into();
        let mut ann = edf.signals[0].clone();
        ann.label = ANNOTATION_LABEL.into();
        edf.signals.push(ecg);
        edf.signals.push(ann);
        edf.samples.push(vec![0; 128]);
        edf.samples.push(vec![0; 128]);
        edf.header.num_signals = 4;
        let parsed = parse_edf(&edf.to_bytes()).unwrap();
        let (r, report) = parsed.to_recording("P", "S").unwrap();
        assert_eq!(r.channels().len(), 2);
        assert_eq!(report.dropped_labels, vec!["ECG".to_string()]);
        assert_eq!(report.annotation_signals, 1);
    }

    #[test]
    fn low_sampling_rate_is_rejected() {
        let rec = recording(&[Electrode::Fp1], 64.0, 128);
        let edf = recording_to_edf(&rec, &EdfWriteOptions::default()).unwrap();
        assert!(matches!(
            edf.to_recording("P", "S"),
            Err(Error::SamplingRateTooLow { .. })
        ));
    }

    #[test]
    fn saturated_samples_are_clamped_and_counted() {
        let rec = recording(&[Electrode::Fp1], 128.0, 128);
        let mut edf = recording_to_edf(&rec, &EdfWriteOptions::default()).unwrap();
        edf.samples[0][5] = i16::MIN; // below digital_min = -32767
        let (r, report) = edf.to_recording("P", "S").unwrap();
        assert_eq!(report.clamped_samples, vec![(Electrode::Fp1, 1)]);
        assert_eq!(r.channels()[0].samples[5], -500.0);
    }

    #[test]
    fn validation() {
        let full = recording(&Electrode::STANDARD_19, 256.0, 256 * 120);
        assert!(validate_recording(full, &Electrode::STANDARD_19, 60.0).is_ok());

        let no_o2: Vec<_> = Electrode::STANDARD_19
            .iter()
            .copied()
            .filter(|&e| e != Electrode::O2)
            .collect();
        let r = recording(&no_o2, 256.0, 256 * 120);
        match validate_recording(r, &Electrode::STANDARD_19, 60.0) {
            Err(Error::MissingChannels(m)) => assert_eq!(m, vec![Electrode::O2]),
            other => panic!("{other:?}"),
        }

        let short = recording(&Electrode::STANDARD_19, 256.0, 256 * 30);
        assert!(matches!(
            validate_recording(short, &Electrode::STANDARD_19, 60.0),
            Err(Error::TooShort { .. })
        ));

        let mut superset = Electrode::STANDARD_19.to_vec();
        superset.extend([Electrode::A1, Electrode::A2]);
        let r = recording(&superset, 256.0, 256 * 60);
        assert!(validate_recording(r, &Electrode::STANDARD_19, 60.0).is_ok());
    }

    #[test]
    fn number_formatting_fits_field() {
        assert_eq!(format_number(-500.0, 8), "-500");
        assert_eq!(format_number(0.5, 8), "0.5");
        assert!(format_number(-3276.123456, 8).len() <= 8);
        assert_eq!(format_number(1.0 / 3.0, 8), "0.333333");
    }
}
