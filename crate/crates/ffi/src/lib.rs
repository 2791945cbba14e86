//! C ABI over the `eegtriage` core.
//!
//! Every function returns an [`EegStatus`]; on failure a message is kept per
//! thread and can be copied out with [`eeg_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_load` functions and released with the
//! matching `*_free`. Missing feature values travel as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use eegtriage::aggregation::{
    aggregate_recording, apply_normalization, FeatureManifest, FeatureMatrix, NormalizationStats, RowId,
};
use eegtriage::calibration::optimize_threshold;
use eegtriage::edf::{parse_edf, validate_recording, Electrode, Recording};
use eegtriage::evaluation::{average_precision, roc_auc};
use eegtriage::features::{FeatureConfig, FeatureExtractor};
use eegtriage::model::TrainedModel;
use eegtriage::montage::apply_montage;
use eegtriage::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EegStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed EDF, JSON or text input.
    Parse = 3,
    /// Well-formed input that cannot be processed (missing channels, too short, ...).
    Data = 4,
    /// Model and feature layout do not match.
    Mismatch = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Parsed EEG recording.
pub struct EegRecording {
    inner: Recording,
}

/// Trained classifier together with the normalization it was fitted with.
pub struct EegClassifier {
    model: TrainedModel,
    stats: NormalizationStats,
    manifest: FeatureManifest,
}

/// Operating point chosen by [`eeg_optimize_threshold`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EegOperatingPoint {
    pub threshold: f64,
    pub recall: f64,
    /// NaN when no row is predicted positive.
    pub precision: f64,
    pub accuracy: f64,
    /// 1 when the recall target was reached.
    pub feasible: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> EegStatus {
    match e.root() {
        Error::TruncatedFile { .. }
        | Error::MalformedField { .. }
        | Error::InvalidCalibration { .. }
        | Error::UnknownElectrode(_)
        | Error::Json(_)
        | Error::Csv(_) => EegStatus::Parse,
        Error::ManifestMismatch { .. } | Error::LengthMismatch { .. } => EegStatus::Mismatch,
        Error::InvalidConfig(_) => EegStatus::InvalidArgument,
        Error::Invariant(_) => EegStatus::Internal,
        _ => EegStatus::Data,
    }
}

struct Failure(EegStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EegStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EegStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EegStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EegStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EegStatus::Internal
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn slice_out<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn str_in<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EegStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn labels_in(p: *const u8, n: usize) -> Result<Vec<bool>, Failure> {
    Ok(slice_in(p, n, "labels")?.iter().map(|&l| l != 0).collect())
}

/// Copies `s` NUL-terminated into `buf`; `needed` receives the full size including NUL.
unsafe fn copy_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Failure> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() && cap == 0 {
        return Ok(());
    }
    let out = slice_out(buf as *mut u8, cap, "buffer")?;
    if cap < n {
        return Err(Failure(
            EegStatus::BufferTooSmall,
            format!("buffer holds {cap} bytes, {n} needed"),
        ));
    }
    out[..s.len()].copy_from_slice(s.as_bytes());
    out[s.len()] = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eeg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf`.
///
/// Pass `buf = NULL, cap = 0` to query the size through `needed`.
///
/// # Safety
/// `buf` must be valid for `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn eeg_last_error_message(buf: *mut c_char, cap: usize, needed: *mut usize) -> EegStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let r = copy_str(&msg, buf, cap, needed);
    match r {
        Ok(()) => EegStatus::Ok,
        Err(Failure(s, _)) => s,
    }
}

/// Number of recording-level features.
#[no_mangle]
pub extern "C" fn eeg_feature_count() -> usize {
    FeatureManifest::standard().len()
}

/// Name of feature `index`, NUL-terminated.
///
/// # Safety
/// `buf` must be valid for `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn eeg_feature_name(index: usize, buf: *mut c_char, cap: usize, needed: *mut usize) -> EegStatus {
    guard(|| {
        let m = FeatureManifest::standard();
        let f = m
            .features
            .get(index)
            .ok_or_else(|| invalid(format!("feature index {index} out of range ({})", m.len())))?;
        copy_str(&f.name, buf, cap, needed)
    })
}

/// Parses an EDF byte buffer into a new recording handle.
///
/// # Safety
/// `data` must be valid for `len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eeg_recording_from_edf(data: *const u8, len: usize, out: *mut *mut EegRecording) -> EegStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let bytes = slice_in(data, len, "data")?;
        let edf = parse_edf(bytes)?;
        let (inner, _) = edf.to_recording("", "")?;
        *out = Box::into_raw(Box::new(EegRecording { inner }));
        Ok(())
    })
}

/// # Safety
/// `rec` must come from [`eeg_recording_from_edf`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eeg_recording_free(rec: *mut EegRecording) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Sampling rate, channel count and samples per channel.
///
/// # Safety
/// `rec` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn eeg_recording_info(
    rec: *const EegRecording,
    fs: *mut f64,
    n_channels: *mut usize,
    n_samples: *mut usize,
) -> EegStatus {
    guard(|| {
        let r = &rec.as_ref().ok_or_else(|| null("rec"))?.inner;
        if !fs.is_null() {
            *fs = r.fs();
        }
        if !n_channels.is_null() {
            *n_channels = r.channels().len();
        }
        if !n_samples.is_null() {
            *n_samples = r.n_samples();
        }
        Ok(())
    })
}

/// Recording-level feature vector with default feature settings.
///
/// Writes [`eeg_feature_count`] values into `out`; undefined values are NaN.
///
/// # Safety
/// `rec` must be a live handle; `out` must be valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn eeg_recording_features(
    rec: *const EegRecording,
    window_s: f64,
    out: *mut f64,
    cap: usize,
) -> EegStatus {
    guard(|| {
        let r = &rec.as_ref().ok_or_else(|| null("rec"))?.inner;
        let n = eeg_feature_count();
        if cap < n {
            return Err(Failure(EegStatus::BufferTooSmall, format!("buffer holds {cap} values, {n} needed")));
        }
        let out = slice_out(out, n, "out")?;
        let validated = validate_recording(r.clone(), &Electrode::STANDARD_19, window_s)?;
        let bipolar = apply_montage(&validated)?;
        let blocks = FeatureExtractor::new(validated.fs(), FeatureConfig::default())?
            .extract_recording(&bipolar, window_s)?;
        for (o, v) in out.iter_mut().zip(aggregate_recording(&blocks)?) {
            *o = v.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Loads a classifier from its model JSON and normalization JSON.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eeg_classifier_load(
    model_json: *const c_char,
    normalization_json: *const c_char,
    out: *mut *mut EegClassifier,
) -> EegStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let model = TrainedModel::from_json(str_in(model_json, "model_json")?)?;
        let stats: NormalizationStats =
            serde_json::from_str(str_in(normalization_json, "normalization_json")?).map_err(Error::from)?;
        let manifest = FeatureManifest::standard();
        if stats.manifest_hash != manifest.hash() {
            return Err(Failure(
                EegStatus::Mismatch,
                "normalization was fitted on a different feature manifest".into(),
            ));
        }
        *out = Box::into_raw(Box::new(EegClassifier { model, stats, manifest }));
        Ok(())
    })
}

/// # Safety
/// `cls` must come from [`eeg_classifier_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eeg_classifier_free(cls: *mut EegClassifier) {
    if !cls.is_null() {
        drop(Box::from_raw(cls));
    }
}

/// Scores `n_rows` raw feature rows (row-major, `n_cols` wide, NaN = missing).
///
/// # Safety
/// `cls` must be a live handle; `x` must hold `n_rows * n_cols` doubles and
/// `out` `n_rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn eeg_classifier_predict(
    cls: *const EegClassifier,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> EegStatus {
    guard(|| {
        let c = cls.as_ref().ok_or_else(|| null("cls"))?;
        if n_cols != c.manifest.len() {
            return Err(Failure(
                EegStatus::Mismatch,
                format!("rows have {n_cols} features, classifier expects {}", c.manifest.len()),
            ));
        }
        let total = n_rows.checked_mul(n_cols).ok_or_else(|| invalid("n_rows * n_cols overflows"))?;
        let x = slice_in(x, total, "x")?;
        let out = slice_out(out, n_rows, "out")?;
        let mut m = FeatureMatrix::new(c.manifest.clone());
        for (i, row) in x.chunks(n_cols.max(1)).take(n_rows).enumerate() {
            let values = row.iter().map(|&v| (!v.is_nan()).then_some(v)).collect();
            let id = RowId {
                recording_id: i.to_string(),
                patient_id: String::new(),
            };
            m.push_row(id, values)?;
        }
        let scores = c.model.predict(&apply_normalization(&m, &c.stats)?)?;
        out.copy_from_slice(&scores);
        Ok(())
    })
}

/// ROC-AUC with ties counted as one half. `labels` are 0/1 bytes.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eeg_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> EegStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = roc_auc(slice_in(scores, n, "scores")?, &labels_in(labels, n)?)?;
        Ok(())
    })
}

/// Step-sum average precision.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eeg_average_precision(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> EegStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = average_precision(slice_in(scores, n, "scores")?, &labels_in(labels, n)?)?;
        Ok(())
    })
}

/// Highest-precision threshold reaching `target_recall`.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eeg_optimize_threshold(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    target_recall: f64,
    out: *mut EegOperatingPoint,
) -> EegStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cal = optimize_threshold(slice_in(scores, n, "scores")?, &labels_in(labels, n)?, target_recall)?;
        *out = EegOperatingPoint {
            threshold: cal.threshold,
            recall: cal.achieved.recall,
            precision: cal.achieved.precision.unwrap_or(f64::NAN),
            accuracy: cal.achieved.accuracy,
            feasible: cal.feasible as i32,
        };
        Ok(())
    })
}
