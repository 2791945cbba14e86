//! Metrics, patient-level splits and grouped cross-validation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{apply_normalization, fit_normalization, FeatureMatrix, NormalizationStats};
use crate::calibration::CalibrationResult;
use crate::error::{Error, Result};
use crate::model::{fit, ModelSpec};
use crate::stats::mean;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Rates with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision_pos: Option<f64>,
    pub recall_pos: Option<f64>,
    pub precision_neg: Option<f64>,
    pub recall_neg: Option<f64>,
    pub f1_pos: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion_and_rates(y_true: &[bool], y_pred: &[bool]) -> Result<Rates> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("no rows to evaluate"));
    }
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    let precision_pos = ratio(c.tp, c.tp + c.fp);
    let recall_pos = ratio(c.tp, c.tp + c.fn_);
    let f1_pos = match (precision_pos, recall_pos) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Rates {
        confusion: c,
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        precision_pos,
        recall_pos,
        precision_neg: ratio(c.tn, c.tn + c.fn_),
        recall_neg: ratio(c.tn, c.tn + c.fp),
        f1_pos,
    })
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("scores contain NaN".into()));
    }
    Ok(())
}

/// Indices sorted by descending score, with ties grouped as ranges.
fn tie_groups(scores: &[f64]) -> (Vec<usize>, Vec<std::ops::Range<usize>>) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=order.len() {
        if i == order.len() || scores[order[i]] != scores[order[start]] {
            groups.push(start..i);
            start = i;
        }
    }
    (order, groups)
}

/// Area under the ROC curve in the Mann-Whitney form: the probability that a
/// positive outscores a negative, ties counting one half.
///
/// Pairs are counted in integers and the ratio is always formed from the
/// smaller side, so `roc_auc(s) + roc_auc(-s) == 1` holds exactly.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let (order, groups) = tie_groups(scores);
    // twice the number of winning pairs plus ties, walking from the top
    let mut wins2: u128 = 0;
    let mut neg_below = n_neg;
    for g in groups {
        let pos = order[g.clone()].iter().filter(|&&i| labels[i]).count() as u128;
        let neg = g.len() as u128 - pos;
        neg_below -= neg;
        wins2 += pos * (2 * neg_below + neg);
    }
    let d = 2 * n_pos * n_neg;
    Ok(if 2 * wins2 <= d {
        wins2 as f64 / d as f64
    } else {
        1.0 - (d - wins2) as f64 / d as f64
    })
}

/// Step-integrated area under the precision-recall curve; tied scores form
/// a single step.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let (order, groups) = tie_groups(scores);
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for g in groups {
        let pos = order[g.clone()].iter().filter(|&&i| labels[i]).count();
        tp += pos;
        seen += g.len();
        if pos > 0 {
            ap += (pos as f64 / n_pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

pub const TEST_FRACTION: f64 = 0.2;
pub const VAL_FRACTION: f64 = 0.2;
pub const MIN_SPLIT_PATIENTS: usize = 5;

impl SplitPlan {
    pub fn role(&self, patient: &str) -> Option<Role> {
        let has = |v: &[String]| v.binary_search_by(|p| p.as_str().cmp(patient)).is_ok();
        if has(&self.train) {
            Some(Role::Train)
        } else if has(&self.val) {
            Some(Role::Val)
        } else if has(&self.test) {
            Some(Role::Test)
        } else {
            None
        }
    }

    pub fn patients(&self, role: Role) -> &[String] {
        match role {
            Role::Train => &self.train,
            Role::Val => &self.val,
            Role::Test => &self.test,
        }
    }

    /// Fails with [`Error::Invariant`] if any patient sits in two sets.
    pub fn assert_disjoint(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in self.train.iter().chain(&self.val).chain(&self.test) {
            if !seen.insert(p) {
                return Err(Error::Invariant(format!("patient {p} appears in two splits")));
            }
        }
        Ok(())
    }

    /// Row indices whose patient has `role`.
    pub fn rows(&self, patient_of_row: &[&str], role: Role) -> Vec<usize> {
        patient_of_row
            .iter()
            .enumerate()
            .filter(|(_, p)| self.role(p) == Some(role))
            .map(|(i, _)| i)
            .collect()
    }
}

fn ceil_frac(n: usize, f: f64) -> usize {
    (n as f64 * f).ceil() as usize
}

/// Seeded patient-level split: `ceil(0.2 N)` patients to test, then
/// `ceil(0.2 M)` of the remaining `M` to validation, the rest to train.
pub fn patient_split(patients: &[String], seed: u64) -> Result<SplitPlan> {
    let mut ids: Vec<String> = patients.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if ids.len() < MIN_SPLIT_PATIENTS {
        return Err(Error::TooFewPatients {
            have: ids.len(),
            need: MIN_SPLIT_PATIENTS,
        });
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ceil_frac(ids.len(), TEST_FRACTION);
    let n_val = ceil_frac(ids.len() - n_test, VAL_FRACTION);
    let mut test = ids[..n_test].to_vec();
    let mut val = ids[n_test..n_test + n_val].to_vec();
    let mut train = ids[n_test + n_val..].to_vec();
    test.sort();
    val.sort();
    train.sort();
    let plan = SplitPlan {
        seed,
        train,
        val,
        test,
    };
    plan.assert_disjoint()?;
    Ok(plan)
}

/// Greedy stratified group k-fold. Patients, shuffled by `seed` and then
/// ordered by descending positive count, go one at a time to the fold with
/// the fewest positives (then fewest recordings, then lowest index).
pub fn stratified_group_kfold(
    patient_of_row: &[&str],
    labels: &[bool],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    if patient_of_row.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: patient_of_row.len(),
            right: labels.len(),
        });
    }
    if k < 2 {
        return Err(Error::InvalidConfig("cross-validation needs k >= 2".into()));
    }
    let mut per_patient: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (&p, &l) in patient_of_row.iter().zip(labels) {
        let e = per_patient.entry(p).or_default();
        e.0 += l as usize;
        e.1 += 1;
    }
    let with_pos = per_patient.values().filter(|v| v.0 > 0).count();
    if with_pos < k {
        return Err(Error::TooFewPatients {
            have: with_pos,
            need: k,
        });
    }
    let mut patients: Vec<(&str, usize, usize)> =
        per_patient.into_iter().map(|(p, (pos, n))| (p, pos, n)).collect();
    patients.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    patients.sort_by_key(|p| std::cmp::Reverse(p.1));
    let mut folds: Vec<(usize, usize, Vec<String>)> = vec![(0, 0, Vec::new()); k];
    for (p, pos, n) in patients {
        let f = (0..k)
            .min_by_key(|&f| (folds[f].0, folds[f].1, f))
            .expect("k >= 2");
        folds[f].0 += pos;
        folds[f].1 += n;
        folds[f].2.push(p.to_string());
    }
    Ok(folds
        .into_iter()
        .map(|(_, _, mut v)| {
            v.sort();
            v
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub roc_auc: f64,
    /// First-column mean and scale of the fold's normalization.
    pub normalization_fingerprint: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean_auc: f64,
    /// Population standard deviation across folds.
    pub std_auc: f64,
}

fn inner_validation(train_rows: &[usize], patients: &[&str], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<&str> = train_rows
        .iter()
        .map(|&i| patients[i])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ceil_frac(ids.len(), VAL_FRACTION).min(ids.len().saturating_sub(1));
    let val: BTreeSet<&str> = ids[..n_val].iter().copied().collect();
    train_rows.iter().partition(|&&i| !val.contains(patients[i]))
}

/// Held-out ROC-AUC of `spec` on each fold. Normalization is refitted on the
/// training part of every fold; the MLP early-stops on an inner patient split
/// of the training part.
pub fn cross_validate(
    features: &FeatureMatrix,
    labels: &[bool],
    folds: &[Vec<String>],
    spec: &ModelSpec,
    seed: u64,
) -> Result<(CvReport, Vec<NormalizationStats>)> {
    if features.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.n_rows(),
            right: labels.len(),
        });
    }
    let patients: Vec<&str> = features.row_ids().iter().map(|r| r.patient_id.as_str()).collect();
    let results: Vec<(FoldResult, NormalizationStats)> = folds
        .par_iter()
        .enumerate()
        .map(|(fold, held_out)| {
            let run = || -> Result<(FoldResult, NormalizationStats)> {
                let held: BTreeSet<&str> = held_out.iter().map(String::as_str).collect();
                let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
                    (0..labels.len()).partition(|&i| held.contains(patients[i]));
                let (fit_rows, val_rows) = match spec.kind {
                    crate::model::ModelKind::Mlp => inner_validation(&train_rows, &patients, seed ^ fold as u64),
                    crate::model::ModelKind::Gbdt => (train_rows.clone(), Vec::new()),
                };
                let stats = fit_normalization(&features.select_rows(&fit_rows))?;
                let pick = |rows: &[usize]| -> Result<(_, Vec<bool>)> {
                    Ok((
                        apply_normalization(&features.select_rows(rows), &stats)?,
                        rows.iter().map(|&i| labels[i]).collect(),
                    ))
                };
                let (x_fit, y_fit) = pick(&fit_rows)?;
                let (x_val, y_val) = pick(&val_rows)?;
                let (x_test, y_test) = pick(&test_rows)?;
                let val = (!val_rows.is_empty()).then_some((&x_val, y_val.as_slice()));
                let out = fit(spec, &x_fit, &y_fit, val)?;
                let scores = out.model.predict(&x_test)?;
                let auc = roc_auc(&scores, &y_test)?;
                Ok((
                    FoldResult {
                        fold,
                        n_train: train_rows.len(),
                        n_test: test_rows.len(),
                        roc_auc: auc,
                        normalization_fingerprint: (
                            stats.means.first().copied().unwrap_or(0.0),
                            stats.scales.first().copied().unwrap_or(1.0),
                        ),
                    },
                    stats,
                ))
            };
            run().map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let (folds_out, stats): (Vec<FoldResult>, Vec<NormalizationStats>) = results.into_iter().unzip();
    let aucs: Vec<f64> = folds_out.iter().map(|f| f.roc_auc).collect();
    let m = mean(&aucs);
    let sd = (aucs.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / aucs.len() as f64).sqrt();
    Ok((
        CvReport {
            k: folds.len(),
            folds: folds_out,
            mean_auc: m,
            std_auc: sd,
        },
        stats,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub disorder: String,
    pub model: String,
    pub threshold: f64,
    pub n_rows: usize,
    pub rates: Rates,
    pub roc_auc: Option<f64>,
    pub average_precision: Option<f64>,
    pub cv_auc_mean: Option<f64>,
    pub cv_auc_std: Option<f64>,
}

pub const EVAL_CSV_HEADER: [&str; 8] = [
    "disorder",
    "model",
    "threshold",
    "accuracy",
    "recall",
    "average_precision",
    "f1",
    "roc_auc",
];

impl EvalReport {
    /// Scores held-out rows at the calibrated threshold. AUC and AP are left
    /// missing when the held-out labels make them undefined.
    pub fn new(
        disorder: &str,
        model: &str,
        scores: &[f64],
        labels: &[bool],
        calibration: &CalibrationResult,
    ) -> Result<Self> {
        let pred: Vec<bool> = scores.iter().map(|&s| s >= calibration.threshold).collect();
        Ok(Self {
            disorder: disorder.to_string(),
            model: model.to_string(),
            threshold: calibration.threshold,
            n_rows: labels.len(),
            rates: confusion_and_rates(labels, &pred)?,
            roc_auc: roc_auc(scores, labels).ok(),
            average_precision: average_precision(scores, labels).ok(),
            cv_auc_mean: None,
            cv_auc_std: None,
        })
    }

    pub fn csv_row(&self) -> [String; 8] {
        let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        [
            self.disorder.clone(),
            self.model.clone(),
            self.threshold.to_string(),
            self.rates.accuracy.to_string(),
            cell(self.rates.recall_pos),
            cell(self.average_precision),
            cell(self.rates.f1_pos),
            cell(self.roc_auc),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn write_eval_csv<W: Write>(reports: &[EvalReport], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(EVAL_CSV_HEADER)?;
    for r in reports {
        wtr.write_record(r.csv_row())?;
    }
    wtr.flush()?;
    Ok(())
}
