//! Command-line front end and the file-based pipeline behind it.
//!
//! Every stage reads and writes plain files in the output directory:
//!
//! | command     | writes |
//! |-------------|--------|
//! | `synth`     | `<patient>_<session>.edf`, `labels.csv`, `patients.csv` |
//! | `extract`   | `features.csv`, `manifest.json`, `montage.json`, `rejections.csv` |
//! | `train`     | `labels.csv`, `split.json`, `model_<d>.json`, `normalization_<d>.json` (+ `training_log_<d>.json` for the MLP) |
//! | `calibrate` | `calibration_<d>.json`, `sweep_<d>.csv`, `threshold_impact_<d>.json` |
//! | `evaluate`  | `eval_<d>.json`, `eval_summary.csv`, `cv_<d>.json` |
//! | `report`    | `pca_<d>.csv`, `roc_<d>.csv`, `pr_<d>.csv`, `importance_<d>.csv`, `scores_<d>.csv` |
//!
//! Training only sees train-split patients, calibration only validation
//! patients; test patients are read by `evaluate` and `report` alone.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{
    aggregate_recording, apply_normalization, fit_normalization, FeatureManifest, FeatureMatrix,
    FeatureSpec, NormalizationStats, RowId,
};
use crate::analysis::{
    curve_points, importance_table, pca2, write_importance_csv, write_pca_csv, write_points_csv,
};
use crate::calibration::{
    optimize_threshold, threshold_impact, write_sweep_csv, CalibrationResult, DEFAULT_TARGET_RECALL,
    DEFAULT_THRESHOLD,
};
use crate::edf::{parse_edf, validate_recording, Electrode};
use crate::error::{Error, Result};
use crate::evaluation::{
    cross_validate, patient_split, stratified_group_kfold, write_eval_csv, EvalReport, Role,
    SplitPlan,
};
use crate::features::{FeatureConfig, FeatureExtractor};
use crate::gbdt::GbdtConfig;
use crate::labels::{LabelRow, LabelTable};
use crate::linalg::Matrix;
use crate::mlp::MlpConfig;
use crate::model::{default_model_kind, fit, ModelKind, ModelSpec, TrainedModel};
use crate::montage::{apply_montage, montage_json};
use crate::segmentation::DEFAULT_WINDOW_S;
use crate::synth::{generate_corpus, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Pipeline settings. Loaded from TOML; command-line flags win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// EDF directory (`extract`) or synthetic corpus directory (`synth`).
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub window_s: f64,
    pub features: FeatureConfig,
    /// Disorders to model; empty means every label column.
    pub disorders: Vec<String>,
    /// Model kind per disorder, overriding the built-in defaults.
    pub models: BTreeMap<String, ModelKind>,
    /// Model kind for every disorder, overriding `models`.
    pub model: Option<ModelKind>,
    pub target_recall: f64,
    pub seed: u64,
    pub cv_k: usize,
    /// Worker threads; 0 lets the runtime decide. Never changes results.
    pub threads: usize,
    pub gbdt: GbdtConfig,
    pub mlp: MlpConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            labels: None,
            out: None,
            window_s: DEFAULT_WINDOW_S,
            features: FeatureConfig::default(),
            disorders: Vec::new(),
            models: BTreeMap::new(),
            model: None,
            target_recall: DEFAULT_TARGET_RECALL,
            seed: 0,
            cv_k: 5,
            threads: 0,
            gbdt: GbdtConfig::default(),
            mlp: MlpConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return Err(Error::InvalidConfig(format!("window_s must be positive, got {}", self.window_s)));
        }
        if !(0.0..=1.0).contains(&self.target_recall) {
            return Err(Error::InvalidConfig(format!(
                "target_recall must lie in [0, 1], got {}",
                self.target_recall
            )));
        }
        if self.cv_k < 2 {
            return Err(Error::InvalidConfig("cv_k must be at least 2".into()));
        }
        self.features.bands.validate()?;
        self.gbdt.validate()?;
        self.mlp.validate()
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("no output directory (--out)".into()))
    }

    fn input_dir(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("no input directory (--input)".into()))
    }

    pub fn model_kind(&self, disorder: &str) -> ModelKind {
        self.model
            .or_else(|| self.models.get(disorder).copied())
            .unwrap_or_else(|| default_model_kind(disorder))
    }

    pub fn model_spec(&self, disorder: &str) -> ModelSpec {
        ModelSpec {
            kind: self.model_kind(disorder),
            gbdt: GbdtConfig {
                seed: self.seed,
                ..self.gbdt.clone()
            },
            mlp: MlpConfig {
                seed: self.seed,
                ..self.mlp.clone()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Gbdt,
    Mlp,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Input directory (EDF files for extract)
    #[arg(long, global = true, value_name = "DIR")]
    input: Option<PathBuf>,
    /// Labels CSV: recording_id,patient_id,<disorder...>
    #[arg(long, global = true, value_name = "PATH")]
    labels: Option<PathBuf>,
    /// Output directory holding every artifact
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Disorder to process (repeatable); default all label columns
    #[arg(long = "disorder", global = true, value_name = "NAME")]
    disorders: Vec<String>,
    /// Classifier for every selected disorder
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, global = true, value_name = "FLOAT")]
    target_recall: Option<f64>,
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    #[arg(long, global = true, value_name = "FLOAT")]
    window_s: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "eegtriage", version, about = "EEG screening pipeline")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic EDF corpus with labels
    Synth,
    /// Ingest EDF files and write recording-level features
    Extract,
    /// Split patients and train one classifier per disorder
    Train,
    /// Choose per-disorder thresholds on the validation split
    Calibrate,
    /// Score the test split and cross-validate
    Evaluate,
    /// Write PCA, curve and importance tables
    Report,
    /// extract, train, calibrate, evaluate and report in sequence
    Run,
}

fn merge_args(mut cfg: PipelineConfig, a: CommonArgs) -> PipelineConfig {
    if a.input.is_some() {
        cfg.input = a.input;
    }
    if a.labels.is_some() {
        cfg.labels = a.labels;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    if !a.disorders.is_empty() {
        cfg.disorders = a.disorders;
    }
    if let Some(m) = a.model {
        cfg.model = Some(match m {
            ModelArg::Gbdt => ModelKind::Gbdt,
            ModelArg::Mlp => ModelKind::Mlp,
        });
    }
    if let Some(v) = a.target_recall {
        cfg.target_recall = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
        cfg.synth.seed = v;
    }
    if let Some(v) = a.threads {
        cfg.threads = v;
    }
    if let Some(v) = a.window_s {
        cfg.window_s = v;
    }
    cfg
}

/// Exit status for an error: 1 for configuration problems, 3 for violated
/// internal invariants, 2 for everything data related.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_DATA,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&std::env::var("EEGTRIAGE_LOG").unwrap_or_else(|_| "warn".into()))
        .format_timestamp(None)
        .try_init();

    let result = (|| -> Result<()> {
        let base = match &cli.common.config {
            Some(p) => PipelineConfig::from_toml(&read_text(p)?).map_err(|e| e.in_file(p))?,
            None => PipelineConfig::default(),
        };
        let cfg = merge_args(base, cli.common);
        cfg.validate()?;
        if cfg.threads > 0 {
            // fails only if a pool already exists, which is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
        }
        match cli.command {
            Command::Synth => cmd_synth(&cfg).map(|_| ()),
            Command::Extract => cmd_extract(&cfg).map(|_| ()),
            Command::Train => cmd_train(&cfg),
            Command::Calibrate => cmd_calibrate(&cfg),
            Command::Evaluate => cmd_evaluate(&cfg).map(|_| ()),
            Command::Report => cmd_report(&cfg),
            Command::Run => cmd_run(&cfg).map(|_| ()),
        }
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("eegtriage: {e}");
            exit_code(&e)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

fn write_bytes(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::from(e).in_file(path))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::from(e).in_file(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_bytes(path, s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::from(e).in_file(path))
}

/// File-name-safe form of a disorder name.
pub fn file_stem(disorder: &str) -> String {
    disorder
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_synth(cfg: &PipelineConfig) -> Result<crate::synth::CorpusPlan> {
    let out = cfg.out_dir()?;
    let plan = generate_corpus(&cfg.synth, out)?;
    info!("synth: wrote {} recordings to {}", plan.recordings.len(), out.display());
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub file: String,
    pub status: &'static str,
    pub reason: String,
    pub n_windows: usize,
    pub clamped_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractSummary {
    pub scanned: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    version: &'a str,
    hash: String,
    n_features: usize,
    features: &'a [FeatureSpec],
}

fn split_stem(stem: &str) -> (String, String) {
    match stem.split_once('_') {
        Some((p, s)) if !p.is_empty() && !s.is_empty() => (p.to_string(), s.to_string()),
        _ => (stem.to_string(), "S1".to_string()),
    }
}

/// Aggregated feature row, window count and clamped-sample count.
type Extracted = (Vec<Option<f64>>, usize, usize);

/// Features of one EDF file, or the reason it was rejected.
pub fn extract_file(
    bytes: &[u8],
    patient_id: &str,
    session_id: &str,
    window_s: f64,
    features: &FeatureConfig,
) -> Result<Extracted> {
    let edf = parse_edf(bytes)?;
    let (rec, report) = edf.to_recording(patient_id, session_id)?;
    let rec = validate_recording(rec, &Electrode::STANDARD_19, window_s)?;
    let bipolar = apply_montage(&rec)?;
    let extractor = FeatureExtractor::new(rec.fs(), *features)?;
    let blocks = extractor.extract_recording(&bipolar, window_s)?;
    let clamped = report.clamped_samples.iter().map(|(_, n)| n).sum();
    Ok((aggregate_recording(&blocks)?, blocks.len(), clamped))
}

pub fn cmd_extract(cfg: &PipelineConfig) -> Result<ExtractSummary> {
    let input = cfg.input_dir()?;
    let out = cfg.out_dir()?;
    fs::create_dir_all(out).map_err(|e| Error::from(e).in_file(out))?;
    let labels = match &cfg.labels {
        Some(p) => Some(LabelTable::read_csv(open(p)?).map_err(|e| e.in_file(p))?),
        None => None,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::from(e).in_file(input))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x.eq_ignore_ascii_case("edf"))
        })
        .collect();
    files.sort();

    let results: Vec<(String, String, Result<Extracted>)> = files
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let (mut patient, session) = split_stem(&stem);
            if let Some(row) = labels.as_ref().and_then(|t| t.get(&stem)) {
                patient = row.patient_id.clone();
            }
            let r = fs::read(path)
                .map_err(Error::from)
                .and_then(|b| extract_file(&b, &patient, &session, cfg.window_s, &cfg.features));
            (stem, patient, r)
        })
        .collect();

    let mut matrix = FeatureMatrix::new(FeatureManifest::standard());
    let mut log = Vec::with_capacity(results.len());
    for ((stem, patient, r), path) in results.into_iter().zip(&files) {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        match r {
            Ok((values, n_windows, clamped)) => {
                matrix.push_row(
                    RowId {
                        recording_id: stem,
                        patient_id: patient,
                    },
                    values,
                )?;
                log.push(Rejection {
                    file,
                    status: "accepted",
                    reason: String::new(),
                    n_windows,
                    clamped_samples: clamped,
                });
            }
            Err(e) => {
                warn!("rejected {file}: {e}");
                log.push(Rejection {
                    file,
                    status: "rejected",
                    reason: e.to_string(),
                    n_windows: 0,
                    clamped_samples: 0,
                });
            }
        }
    }
    let summary = ExtractSummary {
        scanned: files.len(),
        accepted: matrix.n_rows(),
        rejected: files.len() - matrix.n_rows(),
    };
    if summary.accepted + summary.rejected != summary.scanned {
        return Err(Error::Invariant("rejection log does not account for every file".into()));
    }

    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&out.join("rejections.csv"))?);
    for r in &log {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    matrix.write_csv(create(&out.join("features.csv"))?)?;
    let manifest = matrix.manifest();
    write_json(
        &out.join("manifest.json"),
        &ManifestFile {
            version: &manifest.version,
            hash: manifest.hash(),
            n_features: manifest.len(),
            features: &manifest.features,
        },
    )?;
    write_bytes(&out.join("montage.json"), montage_json() + "\n")?;
    info!(
        "extract: {} scanned, {} accepted, {} rejected",
        summary.scanned, summary.accepted, summary.rejected
    );
    if summary.accepted == 0 {
        return Err(Error::EmptyInput("no EDF file was accepted"));
    }
    Ok(summary)
}

/// Feature rows joined with their labels.
struct Dataset {
    features: FeatureMatrix,
    labels: LabelTable,
}

impl Dataset {
    fn load(cfg: &PipelineConfig) -> Result<Self> {
        let out = cfg.out_dir()?;
        let fpath = out.join("features.csv");
        let features = FeatureMatrix::read_csv(open(&fpath)?).map_err(|e| e.in_file(&fpath))?;
        let lpath = cfg.labels.clone().unwrap_or_else(|| out.join("labels.csv"));
        let labels = LabelTable::read_csv(open(&lpath)?).map_err(|e| e.in_file(&lpath))?;

        let mut keep = Vec::new();
        for (i, id) in features.row_ids().iter().enumerate() {
            match labels.get(&id.recording_id) {
                Some(row) if row.patient_id == id.patient_id => keep.push(i),
                Some(row) => {
                    return Err(Error::Data(format!(
                        "recording {} belongs to patient {} in the labels but {} in the features",
                        id.recording_id, row.patient_id, id.patient_id
                    )))
                }
                None => warn!("recording {} has no labels; skipped", id.recording_id),
            }
        }
        let features = features.select_rows(&keep);
        let rows: BTreeMap<String, LabelRow> = features
            .row_ids()
            .iter()
            .map(|id| (id.recording_id.clone(), labels.rows[&id.recording_id].clone()))
            .collect();
        Ok(Self {
            features,
            labels: LabelTable {
                disorders: labels.disorders,
                rows,
            },
        })
    }

    fn disorders(&self, cfg: &PipelineConfig) -> Result<Vec<String>> {
        if cfg.disorders.is_empty() {
            return Ok(self.labels.disorders.clone());
        }
        for d in &cfg.disorders {
            self.labels.disorder_index(d)?;
        }
        Ok(cfg.disorders.clone())
    }

    fn patients(&self) -> Vec<&str> {
        self.features.row_ids().iter().map(|r| r.patient_id.as_str()).collect()
    }

    fn y(&self, disorder: &str) -> Result<Vec<bool>> {
        let k = self.labels.disorder_index(disorder)?;
        Ok(self
            .features
            .row_ids()
            .iter()
            .map(|id| self.labels.rows[&id.recording_id].labels[k])
            .collect())
    }

    fn rows(&self, plan: &SplitPlan, role: Role) -> Result<Vec<usize>> {
        let patients = self.patients();
        if let Some(p) = patients.iter().find(|p| plan.role(p).is_none()) {
            return Err(Error::Data(format!("patient {p} is not covered by split.json; rerun train")));
        }
        Ok(plan.rows(&patients, role))
    }
}

fn load_split(out: &Path) -> Result<SplitPlan> {
    let plan: SplitPlan = read_json(&out.join("split.json"))?;
    plan.assert_disjoint()?;
    Ok(plan)
}

fn pick(ds: &Dataset, rows: &[usize], y: &[bool], stats: &NormalizationStats) -> Result<(Matrix, Vec<bool>)> {
    Ok((
        apply_normalization(&ds.features.select_rows(rows), stats)?,
        rows.iter().map(|&i| y[i]).collect(),
    ))
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let ds = Dataset::load(cfg)?;
    ds.labels.write_csv(create(&out.join("labels.csv"))?)?;
    let patients: Vec<String> = ds.patients().iter().map(|s| s.to_string()).collect();
    let plan = patient_split(&patients, cfg.seed)?;
    write_json(&out.join("split.json"), &plan)?;
    let train_rows = ds.rows(&plan, Role::Train)?;
    let val_rows = ds.rows(&plan, Role::Val)?;
    let stats = fit_normalization(&ds.features.select_rows(&train_rows))?;

    for d in ds.disorders(cfg)? {
        let stem = file_stem(&d);
        let y = ds.y(&d)?;
        let (x_train, y_train) = pick(&ds, &train_rows, &y, &stats)?;
        let (x_val, y_val) = pick(&ds, &val_rows, &y, &stats)?;
        let spec = cfg.model_spec(&d);
        info!("train {d}: {} on {} rows", spec.kind, train_rows.len());
        let fitted = fit(&spec, &x_train, &y_train, Some((&x_val, &y_val)))
            .map_err(|e| e.in_file(out.join(format!("model_{stem}.json"))))?;
        let model = match fitted.model {
            TrainedModel::Mlp(mut m) => {
                m.normalization_hash = Some(stats.fitted_on.clone());
                TrainedModel::Mlp(m)
            }
            other => other,
        };
        write_bytes(&out.join(format!("model_{stem}.json")), model.to_json() + "\n")?;
        write_json(&out.join(format!("normalization_{stem}.json")), &stats)?;
        if let Some(log) = fitted.mlp_log {
            write_json(&out.join(format!("training_log_{stem}.json")), &log)?;
        }
    }
    Ok(())
}

fn load_model(out: &Path, stem: &str) -> Result<(TrainedModel, NormalizationStats)> {
    let mpath = out.join(format!("model_{stem}.json"));
    let model = TrainedModel::from_json(&read_text(&mpath)?).map_err(|e| e.in_file(&mpath))?;
    let stats = read_json(&out.join(format!("normalization_{stem}.json")))?;
    Ok((model, stats))
}

/// Scores of `role` rows for one disorder.
fn scores_for(
    ds: &Dataset,
    plan: &SplitPlan,
    role: Role,
    out: &Path,
    disorder: &str,
) -> Result<(Vec<f64>, Vec<bool>, Vec<usize>)> {
    let (model, stats) = load_model(out, &file_stem(disorder))?;
    let rows = ds.rows(plan, role)?;
    let y = ds.y(disorder)?;
    let (x, labels) = pick(ds, &rows, &y, &stats)?;
    Ok((model.predict(&x)?, labels, rows))
}

pub fn cmd_calibrate(cfg: &PipelineConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let ds = Dataset::load(cfg)?;
    let plan = load_split(out)?;
    for d in ds.disorders(cfg)? {
        let stem = file_stem(&d);
        let (scores, labels, _) = scores_for(&ds, &plan, Role::Val, out, &d)?;
        let cal = optimize_threshold(&scores, &labels, cfg.target_recall)
            .map_err(|e| Error::Data(format!("calibrating {d} on the validation split: {e}")))?
            .with_disorder(&d);
        info!("calibrate {d}: threshold {} (recall {})", cal.threshold, cal.achieved.recall);
        write_bytes(&out.join(format!("calibration_{stem}.json")), cal.to_json() + "\n")?;
        write_sweep_csv(&cal.sweep, create(&out.join(format!("sweep_{stem}.csv")))?)?;
        write_json(
            &out.join(format!("threshold_impact_{stem}.json")),
            &threshold_impact(DEFAULT_THRESHOLD, &cal),
        )?;
    }
    Ok(())
}

/// Test-split report plus the recall the default threshold would have had.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArtifact {
    #[serde(flatten)]
    pub report: EvalReport,
    pub default_threshold: f64,
    pub default_recall: Option<f64>,
}

pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<Vec<EvalArtifact>> {
    let out = cfg.out_dir()?;
    let ds = Dataset::load(cfg)?;
    let plan = load_split(out)?;
    let mut reports = Vec::new();
    let dev_rows: Vec<usize> = {
        let mut r = ds.rows(&plan, Role::Train)?;
        r.extend(ds.rows(&plan, Role::Val)?);
        r.sort_unstable();
        r
    };
    let dev = ds.features.select_rows(&dev_rows);
    let dev_patients: Vec<&str> = dev.row_ids().iter().map(|r| r.patient_id.as_str()).collect();
    for d in ds.disorders(cfg)? {
        let stem = file_stem(&d);
        let cal: CalibrationResult = read_json(&out.join(format!("calibration_{stem}.json")))?;
        let (scores, labels, _) = scores_for(&ds, &plan, Role::Test, out, &d)?;
        let (model, _) = load_model(out, &stem)?;
        let mut report = EvalReport::new(&d, model.kind().as_str(), &scores, &labels, &cal)?;

        let y = ds.y(&d)?;
        let y_dev: Vec<bool> = dev_rows.iter().map(|&i| y[i]).collect();
        let spec = cfg.model_spec(&d);
        let cv = stratified_group_kfold(&dev_patients, &y_dev, cfg.cv_k, cfg.seed)
            .and_then(|folds| cross_validate(&dev, &y_dev, &folds, &spec, cfg.seed));
        match cv {
            Ok((cv, _)) => {
                report.cv_auc_mean = Some(cv.mean_auc);
                report.cv_auc_std = Some(cv.std_auc);
                write_json(&out.join(format!("cv_{stem}.json")), &cv)?;
            }
            Err(e) => warn!("cross-validation for {d} skipped: {e}"),
        }
        let n_pos = labels.iter().filter(|&&l| l).count();
        let default_recall = (n_pos > 0).then(|| {
            let hit = scores
                .iter()
                .zip(&labels)
                .filter(|(&s, &l)| l && s >= DEFAULT_THRESHOLD)
                .count();
            hit as f64 / n_pos as f64
        });
        let artifact = EvalArtifact {
            report,
            default_threshold: DEFAULT_THRESHOLD,
            default_recall,
        };
        write_json(&out.join(format!("eval_{stem}.json")), &artifact)?;
        reports.push(artifact);
    }
    let plain: Vec<EvalReport> = reports.iter().map(|a| a.report.clone()).collect();
    write_eval_csv(&plain, create(&out.join("eval_summary.csv"))?)?;
    Ok(reports)
}

pub fn cmd_report(cfg: &PipelineConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let ds = Dataset::load(cfg)?;
    let plan = load_split(out)?;
    let all_ids: Vec<String> = ds.features.row_ids().iter().map(|r| r.recording_id.clone()).collect();
    for d in ds.disorders(cfg)? {
        let stem = file_stem(&d);
        let (model, stats) = load_model(out, &stem)?;
        let y = ds.y(&d)?;

        let x_all = apply_normalization(&ds.features, &stats)?;
        match pca2(&x_all) {
            Ok(p) => write_pca_csv(&p, &all_ids, &y, create(&out.join(format!("pca_{stem}.csv")))?)?,
            Err(e) => warn!("PCA for {d} skipped: {e}"),
        }

        let (scores, labels, _) = scores_for(&ds, &plan, Role::Test, out, &d)?;
        match curve_points(&scores, &labels) {
            Ok(c) => {
                write_points_csv(["fpr", "tpr"], &c.roc, create(&out.join(format!("roc_{stem}.csv")))?)?;
                write_points_csv(["recall", "precision"], &c.pr, create(&out.join(format!("pr_{stem}.csv")))?)?;
            }
            Err(e) => warn!("curves for {d} skipped: {e}"),
        }

        let all_scores = model.predict(&x_all)?;
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(create(&out.join(format!("scores_{stem}.csv")))?);
        wtr.write_record(["recording_id", "patient_id", "split", "label", "score"])?;
        for (i, id) in ds.features.row_ids().iter().enumerate() {
            let split = match plan.role(&id.patient_id) {
                Some(Role::Train) => "train",
                Some(Role::Val) => "val",
                Some(Role::Test) => "test",
                None => return Err(Error::Invariant(format!("patient {} has no split", id.patient_id))),
            };
            let score = all_scores[i].to_string();
            wtr.write_record([id.recording_id.as_str(), &id.patient_id, split, if y[i] { "1" } else { "0" }, &score])?;
        }
        wtr.flush()?;

        let table = importance_table(&model.importance(), ds.features.manifest(), 30)?;
        write_importance_csv(&table, create(&out.join(format!("importance_{stem}.csv")))?)?;
    }
    Ok(())
}

pub fn cmd_run(cfg: &PipelineConfig) -> Result<Vec<EvalArtifact>> {
    cmd_extract(cfg)?;
    cmd_train(cfg)?;
    cmd_calibrate(cfg)?;
    let reports = cmd_evaluate(cfg)?;
    cmd_report(cfg)?;
    Ok(reports)
}
