//! Recording-level aggregation of window features, median imputation and
//! z-score normalization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{window_feature_names, WindowFeatureBlock, BLOCK_LEN};
use crate::linalg::Matrix;
use crate::stats::{mean, percentile_sorted};

pub const MANIFEST_VERSION: &str = "eegtriage-features/1";
/// Columns whose training standard deviation falls below this are treated as
/// constant and left unscaled.
pub const CONSTANT_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Mean,
    Std,
    Median,
    P5,
    P95,
}

impl Aggregator {
    pub const ALL: [Aggregator; 5] = [
        Aggregator::Mean,
        Aggregator::Std,
        Aggregator::Median,
        Aggregator::P5,
        Aggregator::P95,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Std => "std",
            Aggregator::Median => "median",
            Aggregator::P5 => "p5",
            Aggregator::P95 => "p95",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// 1-based bipolar channel, absent for global features.
    pub channel: Option<usize>,
    /// Window feature name without the channel prefix.
    pub base: String,
    pub aggregator: Aggregator,
}

fn parse_base(block_name: &str) -> (Option<usize>, String) {
    if let Some(rest) = block_name.strip_prefix("Ch") {
        if let Some((num, base)) = rest.split_once('_') {
            if let Ok(ch) = num.parse() {
                return (Some(ch), base.to_string());
            }
        }
    }
    (None, block_name.to_string())
}

/// Ordered recording-level feature names, `<window feature>_<aggregator>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: String,
    pub features: Vec<FeatureSpec>,
}

impl FeatureManifest {
    pub fn standard() -> Self {
        let mut features = Vec::with_capacity(BLOCK_LEN * Aggregator::ALL.len());
        for block_name in window_feature_names() {
            let (channel, base) = parse_base(&block_name);
            for agg in Aggregator::ALL {
                features.push(FeatureSpec {
                    name: format!("{block_name}_{}", agg.suffix()),
                    channel,
                    base: base.clone(),
                    aggregator: agg,
                });
            }
        }
        Self {
            version: MANIFEST_VERSION.to_string(),
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// SHA-256 over the version tag and the ordered names.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.version.as_bytes());
        for name in self.names() {
            h.update(b"\n");
            h.update(name.as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// JSON list of the ordered names.
    pub fn names_json(&self) -> String {
        serde_json::to_string_pretty(&self.names().collect::<Vec<_>>()).expect("names serialize")
    }

    fn from_names(names: Vec<String>) -> Result<Self> {
        let standard = Self::standard();
        if standard.names().eq(names.iter().map(String::as_str)) {
            return Ok(standard);
        }
        // Foreign layout: keep the names, recover provenance from them.
        let mut features = Vec::with_capacity(names.len());
        for name in names {
            let (stem, agg) = Aggregator::ALL
                .iter()
                .find_map(|a| {
                    name.strip_suffix(&format!("_{}", a.suffix()))
                        .map(|s| (s.to_string(), *a))
                })
                .ok_or_else(|| Error::Data(format!("feature {name:?} has no aggregator suffix")))?;
            let (channel, base) = parse_base(&stem);
            features.push(FeatureSpec {
                name,
                channel,
                base,
                aggregator: agg,
            });
        }
        Ok(Self {
            version: MANIFEST_VERSION.to_string(),
            features,
        })
    }
}

/// Collapses window blocks into one recording vector: for each window
/// feature, mean, population std, median, p5 and p95 over the windows where
/// it is defined. Features undefined in every window stay missing.
pub fn aggregate_recording(blocks: &[WindowFeatureBlock]) -> Result<Vec<Option<f64>>> {
    if blocks.is_empty() {
        return Err(Error::EmptyInput("no window blocks"));
    }
    let width = blocks[0].values.len();
    if let Some(b) = blocks.iter().find(|b| b.values.len() != width) {
        return Err(Error::LengthMismatch {
            left: b.values.len(),
            right: width,
        });
    }
    let mut out = Vec::with_capacity(width * Aggregator::ALL.len());
    let mut vals = Vec::with_capacity(blocks.len());
    for f in 0..width {
        vals.clear();
        vals.extend(blocks.iter().filter_map(|b| b.values[f]));
        if vals.is_empty() {
            out.extend([None; 5]);
            continue;
        }
        let m = mean(&vals);
        let sd = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64).sqrt();
        vals.sort_by(f64::total_cmp);
        out.push(Some(m));
        out.push(Some(sd));
        out.push(Some(percentile_sorted(&vals, 50.0)));
        out.push(Some(percentile_sorted(&vals, 5.0)));
        out.push(Some(percentile_sorted(&vals, 95.0)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId {
    pub recording_id: String,
    pub patient_id: String,
}

/// Recording-level features with possibly missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    manifest: FeatureManifest,
    rows: Vec<RowId>,
    cells: Vec<Option<f64>>,
}

impl FeatureMatrix {
    pub fn new(manifest: FeatureManifest) -> Self {
        Self {
            manifest,
            rows: Vec::new(),
            cells: Vec::new(),
        }
    }

    pub fn manifest(&self) -> &FeatureManifest {
        &self.manifest
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.manifest.len()
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let w = self.n_cols();
        &self.cells[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Option<f64>] {
        let w = self.n_cols();
        &mut self.cells[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i * self.n_cols() + j]
    }

    pub fn push_row(&mut self, id: RowId, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.n_cols() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.n_cols(),
            });
        }
        if self.rows.iter().any(|r| r.recording_id == id.recording_id) {
            return Err(Error::Data(format!(
                "duplicate recording id {:?}",
                id.recording_id
            )));
        }
        self.rows.push(id);
        self.cells.extend(values);
        Ok(())
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut out = FeatureMatrix::new(self.manifest.clone());
        for &i in idx {
            out.rows.push(self.rows[i].clone());
            out.cells.extend_from_slice(self.row(i));
        }
        out
    }

    pub fn position(&self, recording_id: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.recording_id == recording_id)
    }

    /// CSV: `recording_id,patient_id,<manifest...>`, missing cells empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["recording_id", "patient_id"];
        header.extend(self.manifest.names());
        wtr.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(self.n_cols() + 2);
        for (i, id) in self.rows.iter().enumerate() {
            record.clear();
            record.push(id.recording_id.clone());
            record.push(id.patient_id.clone());
            record.extend(
                self.row(i)
                    .iter()
                    .map(|c| c.map_or_else(String::new, |v| v.to_string())),
            );
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "recording_id" || &header[1] != "patient_id" {
            return Err(Error::Data(
                "feature CSV must start with recording_id,patient_id".into(),
            ));
        }
        let names = header.iter().skip(2).map(str::to_string).collect();
        let mut out = FeatureMatrix::new(FeatureManifest::from_names(names)?);
        for rec in rdr.records() {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(2)
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>()
                            .map(Some)
                            .map_err(|_| Error::Data(format!("bad feature value {c:?}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            out.push_row(
                RowId {
                    recording_id: rec[0].to_string(),
                    patient_id: rec[1].to_string(),
                },
                values,
            )?;
        }
        Ok(out)
    }
}

fn hash_row_ids(rows: &[RowId]) -> String {
    let mut h = Sha256::new();
    for r in rows {
        h.update(r.recording_id.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Per-column imputation and scaling statistics, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub manifest_hash: String,
    /// Hash of the training recording ids.
    pub fitted_on: String,
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    /// Population std of the imputed column; 1.0 for constant columns.
    pub scales: Vec<f64>,
    pub constant: Vec<bool>,
}

pub fn fit_normalization(train: &FeatureMatrix) -> Result<NormalizationStats> {
    if train.n_rows() < 2 {
        return Err(Error::EmptyInput("normalization needs at least two rows"));
    }
    let n = train.n_rows();
    let w = train.n_cols();
    let mut medians = Vec::with_capacity(w);
    let mut means = Vec::with_capacity(w);
    let mut scales = Vec::with_capacity(w);
    let mut constant = Vec::with_capacity(w);
    let mut observed = Vec::with_capacity(n);
    let mut column = Vec::with_capacity(n);
    for j in 0..w {
        observed.clear();
        observed.extend((0..n).filter_map(|i| train.get(i, j)));
        observed.sort_by(f64::total_cmp);
        // A column never observed in training imputes to zero.
        let median = if observed.is_empty() {
            0.0
        } else {
            percentile_sorted(&observed, 50.0)
        };
        column.clear();
        column.extend((0..n).map(|i| train.get(i, j).unwrap_or(median)));
        let m = mean(&column);
        let sd = (column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
        let is_const = sd < CONSTANT_STD;
        medians.push(median);
        means.push(m);
        scales.push(if is_const { 1.0 } else { sd });
        constant.push(is_const);
    }
    Ok(NormalizationStats {
        manifest_hash: train.manifest().hash(),
        fitted_on: hash_row_ids(train.row_ids()),
        medians,
        means,
        scales,
        constant,
    })
}

pub fn apply_normalization(m: &FeatureMatrix, s: &NormalizationStats) -> Result<Matrix> {
    let hash = m.manifest().hash();
    if hash != s.manifest_hash || m.n_cols() != s.medians.len() {
        return Err(Error::ManifestMismatch {
            expected: s.manifest_hash.clone(),
            actual: hash,
        });
    }
    let mut data = Vec::with_capacity(m.n_rows() * m.n_cols());
    for i in 0..m.n_rows() {
        for (j, cell) in m.row(i).iter().enumerate() {
            let v = cell.unwrap_or(s.medians[j]);
            data.push(if s.constant[j] {
                v - s.means[j]
            } else {
                (v - s.means[j]) / s.scales[j]
            });
        }
    }
    Ok(Matrix::new(m.n_rows(), m.n_cols(), data)?.with_manifest_hash(hash))
}
