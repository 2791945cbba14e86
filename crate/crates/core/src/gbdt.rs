//! Regularized gradient-boosted decision trees for binary classification.
//!
//! Second-order boosting on the weighted logistic loss with exact greedy split
//! search. Trees grow level by level; each level scans every sampled feature
//! once in presorted order, accumulating left-hand gradient sums for all
//! frontier nodes at the same time.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stats::{sigmoid, softplus};

pub const FORMAT: &str = "eegtriage-gbdt/1";
/// Bound on the weighted base rate before the log-odds transform.
pub const BASE_RATE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub subsample: f64,
    pub colsample: f64,
    /// Minimum loss reduction required to split.
    pub gamma: f64,
    /// L1 penalty on leaf weights.
    pub alpha: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_child_hessian: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            learning_rate: 0.05,
            n_estimators: 300,
            subsample: 0.8,
            colsample: 0.8,
            gamma: 0.1,
            alpha: 0.1,
            lambda: 1.5,
            min_child_hessian: 1.0,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("gbdt: {m}")));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("colsample must be in (0, 1]");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.gamma >= 0.0 && self.alpha >= 0.0 && self.lambda >= 0.0) {
            return bad("gamma, alpha and lambda must be non-negative");
        }
        if !(self.min_child_hessian >= 0.0) {
            return bad("min_child_hessian must be non-negative");
        }
        Ok(())
    }
}

/// Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Regularized loss reduction of this split.
        gain: f64,
        /// Hessian sum of the training rows reaching this node.
        cover: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Calls `f(feature, gain)` for every split node.
    pub fn visit_splits(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub format: String,
    /// Initial margin, in log-odds.
    pub base_score: f64,
    pub config: GbdtConfig,
    pub n_features: usize,
    pub manifest_hash: String,
    pub trees: Vec<TreeNode>,
    /// Weighted mean training loss before the first round and after each one.
    #[serde(default)]
    pub training_loss: Vec<f64>,
}

impl Ensemble {
    /// Ensemble with no trees, for hand construction.
    pub fn empty(base_score: f64, config: GbdtConfig, n_features: usize, manifest_hash: &str) -> Self {
        Self {
            format: FORMAT.to_string(),
            base_score,
            config,
            n_features,
            manifest_hash: manifest_hash.to_string(),
            trees: Vec::new(),
            training_loss: Vec::new(),
        }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_value(x)).sum();
        self.base_score + self.config.learning_rate * sum
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: Ensemble = serde_json::from_str(s)?;
        if e.format != FORMAT {
            return Err(Error::Data(format!("unsupported model format {:?}", e.format)));
        }
        Ok(e)
    }
}

pub(crate) fn check_training_input(x: &Matrix, y: &[bool], w: &[f64]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if w.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: y.len(),
        });
    }
    if x.n_rows() < 2 {
        return Err(Error::EmptyInput("training needs at least two rows"));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::DegenerateLabels);
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidConfig(
            "sample weights must be finite, non-negative and not all zero".into(),
        ));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("design matrix contains non-finite values".into()));
    }
    Ok(())
}

/// Weighted mean logistic loss of margins `f`.
pub fn weighted_log_loss(f: &[f64], y: &[bool], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&fi, &yi), &wi) in f.iter().zip(y).zip(w) {
        let l = if yi { softplus(-fi) } else { softplus(fi) };
        num += wi * l;
        den += wi;
    }
    num / den
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    g.signum() * (g.abs() - alpha).max(0.0)
}

/// Optimal leaf weight for gradient sum `g` and hessian sum `h`.
pub fn leaf_weight(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    -soft_threshold(g, alpha) / (h + lambda)
}

/// Regularized gain of splitting (g, h) into (gl, hl) and the remainder.
pub fn split_gain(gl: f64, hl: f64, g: f64, h: f64, lambda: f64, gamma: f64) -> f64 {
    let (gr, hr) = (g - gl, h - hl);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    gl: f64,
    hl: f64,
}

#[derive(Debug, Clone, Copy)]
struct Frontier {
    slot: usize,
    g: f64,
    h: f64,
}

enum Slot {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        cover: f64,
        left: usize,
        right: usize,
    },
}

fn assemble(slots: &[Slot], i: usize) -> TreeNode {
    match slots[i] {
        Slot::Leaf(weight) => TreeNode::Leaf { weight },
        Slot::Split {
            feature,
            threshold,
            gain,
            cover,
            left,
            right,
        } => TreeNode::Split {
            feature,
            threshold,
            gain,
            cover,
            left: Box::new(assemble(slots, left)),
            right: Box::new(assemble(slots, right)),
        },
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    order: &'a [Vec<u32>],
    cfg: &'a GbdtConfig,
}

impl Builder<'_> {
    /// Best split per frontier node along one feature.
    fn scan_feature(
        &self,
        f: usize,
        node_of: &[Option<u32>],
        frontier: &[Frontier],
        g: &[f64],
        h: &[f64],
    ) -> Vec<Option<Candidate>> {
        let cfg = self.cfg;
        // (g_left, h_left, last value seen, seen any)
        let mut acc = vec![(0.0, 0.0, 0.0, false); frontier.len()];
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        for &r in &self.order[f] {
            let r = r as usize;
            let Some(node) = node_of[r] else { continue };
            let node = node as usize;
            let v = self.x.get(r, f);
            let a = &mut acc[node];
            if a.3 && v > a.2 {
                let Frontier { g: gt, h: ht, .. } = frontier[node];
                let (gl, hl) = (a.0, a.1);
                if hl >= cfg.min_child_hessian && ht - hl >= cfg.min_child_hessian {
                    let gain = split_gain(gl, hl, gt, ht, cfg.lambda, cfg.gamma);
                    if gain > 0.0 && best[node].is_none_or(|b| gain > b.gain) {
                        let mut threshold = a.2 + (v - a.2) / 2.0;
                        if threshold <= a.2 {
                            threshold = v;
                        }
                        best[node] = Some(Candidate {
                            feature: f,
                            threshold,
                            gain,
                            gl,
                            hl,
                        });
                    }
                }
            }
            a.0 += g[r];
            a.1 += h[r];
            a.2 = v;
            a.3 = true;
        }
        best
    }

    fn build(&self, rows: &[usize], features: &[usize], g: &[f64], h: &[f64]) -> Option<TreeNode> {
        let cfg = self.cfg;
        let mut node_of: Vec<Option<u32>> = vec![None; self.x.n_rows()];
        let (mut gt, mut ht) = (0.0, 0.0);
        for &r in rows {
            node_of[r] = Some(0);
            gt += g[r];
            ht += h[r];
        }
        let mut slots = vec![Slot::Leaf(0.0)];
        let mut frontier = vec![Frontier { slot: 0, g: gt, h: ht }];

        for _depth in 0..cfg.max_depth {
            if frontier.is_empty() {
                break;
            }
            let per_feature: Vec<Vec<Option<Candidate>>> = features
                .par_iter()
                .map(|&f| self.scan_feature(f, &node_of, &frontier, g, h))
                .collect();
            // Features are in ascending order; strict improvement keeps the
            // lower feature index on ties.
            let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
            for cands in per_feature {
                for (b, c) in best.iter_mut().zip(cands) {
                    if let Some(c) = c {
                        if b.is_none_or(|b| c.gain > b.gain) {
                            *b = Some(c);
                        }
                    }
                }
            }

            let mut next = Vec::new();
            // new frontier index of the (left, right) children of each node
            let mut child_ids: Vec<Option<(u32, u32)>> = vec![None; frontier.len()];
            for (i, node) in frontier.iter().enumerate() {
                match best[i] {
                    Some(c) => {
                        let left = slots.len();
                        slots.push(Slot::Leaf(0.0));
                        slots.push(Slot::Leaf(0.0));
                        slots[node.slot] = Slot::Split {
                            feature: c.feature,
                            threshold: c.threshold,
                            gain: c.gain,
                            cover: node.h,
                            left,
                            right: left + 1,
                        };
                        child_ids[i] = Some((next.len() as u32, next.len() as u32 + 1));
                        next.push(Frontier {
                            slot: left,
                            g: c.gl,
                            h: c.hl,
                        });
                        next.push(Frontier {
                            slot: left + 1,
                            g: node.g - c.gl,
                            h: node.h - c.hl,
                        });
                    }
                    None => {
                        slots[node.slot] = Slot::Leaf(leaf_weight(node.g, node.h, cfg.alpha, cfg.lambda));
                    }
                }
            }
            for &r in rows {
                let Some(n) = node_of[r] else { continue };
                node_of[r] = match (child_ids[n as usize], best[n as usize]) {
                    (Some((l, rt)), Some(c)) => Some(if self.x.get(r, c.feature) < c.threshold {
                        l
                    } else {
                        rt
                    }),
                    _ => None,
                };
            }
            frontier = next;
        }
        for node in &frontier {
            slots[node.slot] = Slot::Leaf(leaf_weight(node.g, node.h, cfg.alpha, cfg.lambda));
        }
        match slots[0] {
            Slot::Leaf(_) => None,
            Slot::Split { .. } => Some(assemble(&slots, 0)),
        }
    }
}

fn sample_sorted(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<usize> {
    let k = ((rate * n as f64).round() as usize).clamp(1, n);
    if k == n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Fits an ensemble. Trees whose root finds no admissible split are dropped.
pub fn train(x: &Matrix, y: &[bool], w: &[f64], cfg: &GbdtConfig) -> Result<Ensemble> {
    cfg.validate()?;
    check_training_input(x, y, w)?;
    let n = x.n_rows();
    let p = x.n_cols();

    let wsum: f64 = w.iter().sum();
    let wpos: f64 = w.iter().zip(y).filter(|(_, &yi)| yi).map(|(wi, _)| wi).sum();
    let rate = (wpos / wsum).clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP);
    let base_score = (rate / (1.0 - rate)).ln();

    let order: Vec<Vec<u32>> = (0..p)
        .into_par_iter()
        .map(|f| {
            let mut o: Vec<u32> = (0..n as u32).collect();
            o.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
            o
        })
        .collect();

    let mut ens = Ensemble::empty(base_score, cfg.clone(), p, x.manifest_hash());
    let mut margin = vec![base_score; n];
    ens.training_loss.push(weighted_log_loss(&margin, y, w));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let builder = Builder {
        x,
        order: &order,
        cfg,
    };

    for _round in 0..cfg.n_estimators {
        for i in 0..n {
            let s = sigmoid(margin[i]);
            g[i] = w[i] * (s - if y[i] { 1.0 } else { 0.0 });
            h[i] = w[i] * s * (1.0 - s);
        }
        let rows = sample_sorted(&mut rng, n, cfg.subsample);
        let features = sample_sorted(&mut rng, p, cfg.colsample);
        if let Some(tree) = builder.build(&rows, &features, &g, &h) {
            for (i, m) in margin.iter_mut().enumerate() {
                *m += cfg.learning_rate * tree.leaf_value(x.row(i));
            }
            ens.trees.push(tree);
        }
        ens.training_loss.push(weighted_log_loss(&margin, y, w));
    }
    log::debug!(
        "gbdt: {} trees kept of {}, final loss {:.5}",
        ens.trees.len(),
        cfg.n_estimators,
        ens.training_loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(ens)
}

fn check_predict_input(e: &Ensemble, x: &Matrix) -> Result<()> {
    if x.manifest_hash() != e.manifest_hash {
        return Err(Error::ManifestMismatch {
            expected: e.manifest_hash.clone(),
            actual: x.manifest_hash().to_string(),
        });
    }
    if x.n_cols() != e.n_features {
        return Err(Error::LengthMismatch {
            left: x.n_cols(),
            right: e.n_features,
        });
    }
    Ok(())
}

pub fn predict(e: &Ensemble, x: &Matrix) -> Result<Vec<f64>> {
    check_predict_input(e, x)?;
    Ok(x.rows_iter().map(|r| sigmoid(e.margin(r))).collect())
}

/// Total split gain per feature, normalized to sum to one. All zeros when the
/// ensemble has no splits.
pub fn importance(e: &Ensemble) -> Vec<f64> {
    let mut imp = vec![0.0; e.n_features];
    for t in &e.trees {
        t.visit_splits(&mut |f, gain| imp[f] += gain);
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        for v in imp.iter_mut() {
            *v /= total;
        }
    }
    imp
}
