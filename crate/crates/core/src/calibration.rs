//! Recall-constrained decision thresholds.
//!
//! A row is predicted positive when `score >= threshold`. Candidates are the
//! distinct scores plus zero; among those meeting the recall target the most
//! precise one wins (higher threshold, then higher accuracy, on ties). When no
//! candidate meets the target the highest-recall one is taken instead.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TARGET_RECALL: f64 = 0.80;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub recall: f64,
    /// Missing when nothing is predicted positive.
    pub precision: Option<f64>,
    pub accuracy: f64,
    pub f1: Option<f64>,
}

impl SweepPoint {
    fn from_counts(threshold: f64, tp: usize, fp: usize, n_pos: usize, n_neg: usize) -> Self {
        let fn_ = n_pos - tp;
        let tn = n_neg - fp;
        let recall = tp as f64 / n_pos as f64;
        let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
        let f1 = precision.and_then(|p| (p + recall > 0.0).then(|| 2.0 * p * recall / (p + recall)));
        Self {
            threshold,
            tp,
            fp,
            tn,
            fn_,
            recall,
            precision,
            accuracy: (tp + tn) as f64 / (n_pos + n_neg) as f64,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub disorder: String,
    pub target_recall: f64,
    /// Whether some candidate reached the target.
    pub feasible: bool,
    pub threshold: f64,
    pub achieved: SweepPoint,
    /// One point per candidate, ascending threshold.
    pub sweep: Vec<SweepPoint>,
}

impl CalibrationResult {
    pub fn with_disorder(mut self, disorder: impl Into<String>) -> Self {
        self.disorder = disorder.into();
        self
    }

    /// Operating point for an arbitrary threshold, read off the sweep: the
    /// positive set at `t` is the one of the smallest candidate `>= t`.
    pub fn point_at(&self, t: f64) -> SweepPoint {
        match self.sweep.iter().find(|p| p.threshold >= t) {
            Some(p) => SweepPoint { threshold: t, ..*p },
            None => {
                let any = self.sweep[0];
                let (n_pos, n_neg) = (any.tp + any.fn_, any.fp + any.tn);
                SweepPoint::from_counts(t, 0, 0, n_pos, n_neg)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.total_cmp(&b),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    }
}

/// Ordering used to pick the operating point among equally admissible ones.
fn preference(a: &SweepPoint, b: &SweepPoint) -> Ordering {
    cmp_opt(a.precision, b.precision)
        .then(a.threshold.total_cmp(&b.threshold))
        .then(a.accuracy.total_cmp(&b.accuracy))
}

/// Confusion counts of every candidate threshold, ascending.
pub fn sweep(scores: &[f64], labels: &[bool]) -> Result<Vec<SweepPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let n_neg = labels.len() - n_pos;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::with_capacity(scores.len() + 1);
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    let mut zero_seen = false;
    while i < order.len() {
        let s = scores[order[i]];
        if s < 0.0 && !zero_seen {
            points.push(SweepPoint::from_counts(0.0, tp, fp, n_pos, n_neg));
            zero_seen = true;
        }
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        zero_seen |= s == 0.0;
        points.push(SweepPoint::from_counts(s, tp, fp, n_pos, n_neg));
    }
    if !zero_seen {
        points.push(SweepPoint::from_counts(0.0, tp, fp, n_pos, n_neg));
    }
    points.reverse();
    Ok(points)
}

pub fn optimize_threshold(scores: &[f64], labels: &[bool], target_recall: f64) -> Result<CalibrationResult> {
    if !(0.0..=1.0).contains(&target_recall) {
        return Err(Error::InvalidConfig(format!(
            "target recall {target_recall} outside [0, 1]"
        )));
    }
    let sweep = sweep(scores, labels)?;
    let feasible_best = sweep
        .iter()
        .filter(|p| p.recall >= target_recall)
        .max_by(|a, b| preference(a, b));
    let (feasible, achieved) = match feasible_best {
        Some(p) => (true, *p),
        None => {
            let best = sweep
                .iter()
                .max_by(|a, b| a.recall.total_cmp(&b.recall).then(preference(a, b)))
                .expect("sweep is never empty");
            (false, *best)
        }
    };
    Ok(CalibrationResult {
        disorder: String::new(),
        target_recall,
        feasible,
        threshold: achieved.threshold,
        achieved,
        sweep,
    })
}

/// Recall at the default threshold versus the calibrated one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdImpact {
    pub disorder: String,
    pub default_threshold: f64,
    pub default_recall: f64,
    pub optimized_threshold: f64,
    pub optimized_recall: f64,
    pub recall_gain: f64,
    pub default_precision: Option<f64>,
    pub optimized_precision: Option<f64>,
}

pub fn threshold_impact(default_threshold: f64, calibrated: &CalibrationResult) -> ThresholdImpact {
    let d = calibrated.point_at(default_threshold);
    let o = calibrated.achieved;
    ThresholdImpact {
        disorder: calibrated.disorder.clone(),
        default_threshold,
        default_recall: d.recall,
        optimized_threshold: calibrated.threshold,
        optimized_recall: o.recall,
        recall_gain: o.recall - d.recall,
        default_precision: d.precision,
        optimized_precision: o.precision,
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// CSV columns: threshold,recall,precision,accuracy,f1.
pub fn write_sweep_csv<W: Write>(sweep: &[SweepPoint], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(["threshold", "recall", "precision", "accuracy", "f1"])?;
    for p in sweep {
        wtr.write_record([
            p.threshold.to_string(),
            p.recall.to_string(),
            opt_cell(p.precision),
            p.accuracy.to_string(),
            opt_cell(p.f1),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_example() {
        let r = optimize_threshold(&[0.9, 0.8, 0.2], &[true, true, false], 1.0).unwrap();
        assert_eq!(r.threshold, 0.8);
        assert_eq!(r.achieved.recall, 1.0);
        assert_eq!(r.achieved.precision, Some(1.0));
        assert!(r.feasible);
        let thresholds: Vec<f64> = r.sweep.iter().map(|p| p.threshold).collect();
        assert_eq!(thresholds, vec![0.0, 0.2, 0.8, 0.9]);
    }

    #[test]
    fn separated_scores() {
        let r = optimize_threshold(&[0.1, 0.3, 0.6, 0.7], &[false, false, true, true], 0.8).unwrap();
        assert!(r.threshold > 0.3 && r.threshold <= 0.6);
        assert_eq!((r.achieved.recall, r.achieved.precision), (1.0, Some(1.0)));
    }

    #[test]
    fn no_positives() {
        assert!(matches!(
            optimize_threshold(&[0.1, 0.2], &[false, false], 0.8),
            Err(Error::NoPositives)
        ));
    }

    #[test]
    fn infeasible_takes_max_recall() {
        // negative scores: the zero candidate predicts nothing positive
        let r = optimize_threshold(&[-0.5, -0.2, -0.9], &[true, false, true], 0.8).unwrap();
        assert!(r.feasible);
        assert_eq!(r.threshold, -0.9);
        let r = optimize_threshold(&[0.5, 0.2], &[true, false], 1.0).unwrap();
        assert_eq!(r.threshold, 0.5);
    }

    fn brute_force(scores: &[f64], labels: &[bool], target: f64) -> (f64, SweepPoint) {
        let mut cands: Vec<f64> = scores.to_vec();
        cands.push(0.0);
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        let n_pos = labels.iter().filter(|&&l| l).count();
        let n_neg = labels.len() - n_pos;
        let points: Vec<SweepPoint> = cands
            .iter()
            .map(|&t| {
                let tp = scores.iter().zip(labels).filter(|(&s, &l)| l && s >= t).count();
                let fp = scores.iter().zip(labels).filter(|(&s, &l)| !l && s >= t).count();
                SweepPoint::from_counts(t, tp, fp, n_pos, n_neg)
            })
            .collect();
        let mut best: Option<SweepPoint> = None;
        let feasible = points.iter().any(|p| p.recall >= target);
        for p in &points {
            if feasible && p.recall < target {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) if !feasible && p.recall != b.recall => p.recall > b.recall,
                Some(b) => preference(p, &b) == Ordering::Greater,
            };
            if better {
                best = Some(*p);
            }
        }
        let b = best.unwrap();
        (b.threshold, b)
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(2..60);
            let coarse = rng.random_bool(0.5);
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    let s: f64 = rng.random();
                    if coarse {
                        (s * 8.0).floor() / 8.0
                    } else {
                        s
                    }
                })
                .collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
            labels[0] = true;
            let target = [0.5, 0.8, 0.9, 1.0][rng.random_range(0..4)];
            let r = optimize_threshold(&scores, &labels, target).unwrap();
            let (t, p) = brute_force(&scores, &labels, target);
            assert_eq!(r.threshold, t);
            assert_eq!(r.achieved, p);
            for w in r.sweep.windows(2) {
                assert!(w[0].threshold < w[1].threshold);
                assert!(w[1].recall <= w[0].recall);
            }
            // re-applying the threshold reproduces the recorded counts
            let tp = scores.iter().zip(&labels).filter(|(&s, &l)| l && s >= r.threshold).count();
            let fp = scores.iter().zip(&labels).filter(|(&s, &l)| !l && s >= r.threshold).count();
            assert_eq!((tp, fp), (r.achieved.tp, r.achieved.fp));
        }
    }

    #[test]
    fn impact() {
        let r = optimize_threshold(&[0.9, 0.5, 0.3], &[true, true, false], 0.5).unwrap();
        assert_eq!(r.threshold, 0.9);
        let i = threshold_impact(0.9, &r);
        assert_eq!(i.recall_gain, 0.0);

        // 20 positives: 8 score above 0.5, 9 more between 0.2 and 0.5
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for k in 0..20 {
            scores.push(if k < 8 { 0.6 + k as f64 * 0.01 } else if k < 17 { 0.25 + k as f64 * 0.01 } else { 0.01 * k as f64 - 0.1 });
            labels.push(true);
        }
        for k in 0..100 {
            scores.push(0.001 * k as f64);
            labels.push(false);
        }
        let r = optimize_threshold(&scores, &labels, 0.85).unwrap();
        let i = threshold_impact(DEFAULT_THRESHOLD, &r);
        assert_eq!(i.default_recall, 0.4);
        assert_eq!(i.optimized_recall, 0.85);
        assert!((i.recall_gain - 0.45).abs() < 1e-12);
        let at_half = scores.iter().zip(&labels).filter(|(&s, &l)| l && s >= 0.5).count();
        assert_eq!(at_half as f64 / 20.0, i.default_recall);
        assert!(r.threshold <= 0.5 && i.recall_gain >= 0.0);
    }

    #[test]
    fn sweep_csv() {
        let r = optimize_threshold(&[0.9, 0.2], &[true, false], 0.8).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&r.sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "threshold,recall,precision,accuracy,f1\n0,1,0.5,0.5,0.6666666666666666\n0.2,1,0.5,0.5,0.6666666666666666\n0.9,1,1,1,1\n"
        );
    }
}
