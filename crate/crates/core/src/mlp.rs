//! Multi-layer perceptron with rectified-linear hidden layers and a sigmoid
//! output, trained with Adam on weighted binary cross-entropy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::check_training_input;
use crate::linalg::Matrix;
use crate::stats::{sigmoid, softplus};

pub const FORMAT: &str = "eegtriage-mlp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Coefficient of the squared-norm penalty on weights (not biases).
    pub l2: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128, 64],
            learning_rate: 1e-3,
            batch_size: 32,
            l2: 1e-4,
            patience: 20,
            max_epochs: 500,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("mlp: {m}")));
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be at least 1");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return bad("Adam betas must lie in [0, 1) and epsilon must be positive");
        }
        Ok(())
    }
}

/// Dense layer; `weights` is row-major `n_out x n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.n_in).zip(&self.bias).map(|(row, b)| {
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format: String,
    pub n_features: usize,
    pub manifest_hash: String,
    /// Hash of the normalization statistics the inputs were scaled with.
    #[serde(default)]
    pub normalization_hash: Option<String>,
    pub layers: Vec<Layer>,
}

/// Parameter-shaped buffer (gradients, Adam moments).
pub type Gradients = Vec<Layer>;

impl MlpModel {
    /// Zero-initialized network with the given layer sizes, input first.
    pub fn zeros(sizes: &[usize], manifest_hash: &str) -> Result<Self> {
        if sizes.len() < 2 || *sizes.last().unwrap() != 1 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "layer sizes must be positive and end in a single output".into(),
            ));
        }
        Ok(Self {
            format: FORMAT.to_string(),
            n_features: sizes[0],
            manifest_hash: manifest_hash.to_string(),
            normalization_hash: None,
            layers: sizes.windows(2).map(|s| Layer::zeros(s[0], s[1])).collect(),
        })
    }

    /// He initialization: weights ~ N(0, 2 / fan_in), biases zero.
    pub fn he_init(sizes: &[usize], manifest_hash: &str, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut m = Self::zeros(sizes, manifest_hash)?;
        for layer in &mut m.layers {
            let normal = Normal::new(0.0, (2.0 / layer.n_in as f64).sqrt()).expect("valid std");
            for w in &mut layer.weights {
                *w = normal.sample(rng);
            }
        }
        Ok(m)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.n_features];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Output logit for one row.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if k < last {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    fn zero_like(&self) -> Gradients {
        self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect()
    }

    fn weight_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum()
    }

    /// Objective over the rows `idx` and its gradient:
    /// `sum_i w_i bce_i / sum_i w_i + l2 * sum ||W||^2`.
    pub fn loss_and_gradient(
        &self,
        x: &Matrix,
        y: &[bool],
        w: &[f64],
        idx: &[usize],
        l2: f64,
    ) -> (f64, Gradients) {
        let mut grad = self.zero_like();
        let wsum: f64 = idx.iter().map(|&i| w[i]).sum();
        let n_layers = self.layers.len();
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
        let mut delta = Vec::new();
        let mut back = Vec::new();
        let mut data_loss = 0.0;
        for &i in idx {
            acts[0].clear();
            acts[0].extend_from_slice(x.row(i));
            for k in 0..n_layers {
                let (done, rest) = acts.split_at_mut(k + 1);
                self.layers[k].forward(&done[k], &mut rest[0]);
                if k + 1 < n_layers {
                    for v in rest[0].iter_mut() {
                        *v = v.max(0.0);
                    }
                }
            }
            let z = acts[n_layers][0];
            let yi = if y[i] { 1.0 } else { 0.0 };
            let scale = w[i] / wsum;
            data_loss += scale * (softplus(z) - yi * z);
            delta.clear();
            delta.push(scale * (sigmoid(z) - yi));
            for k in (0..n_layers).rev() {
                let layer = &self.layers[k];
                let g = &mut grad[k];
                let input = &acts[k];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[o] += d;
                    for (gw, &a) in g.weights[o * layer.n_in..(o + 1) * layer.n_in].iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if k == 0 {
                    break;
                }
                back.clear();
                back.resize(layer.n_in, 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (b, &wv) in back.iter_mut().zip(&layer.weights[o * layer.n_in..(o + 1) * layer.n_in]) {
                        *b += d * wv;
                    }
                }
                // ReLU derivative: the stored activation is positive exactly
                // where the pre-activation was.
                for (b, &a) in back.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *b = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut back);
            }
        }
        if l2 > 0.0 {
            for (g, l) in grad.iter_mut().zip(&self.layers) {
                for (gw, w) in g.weights.iter_mut().zip(&l.weights) {
                    *gw += 2.0 * l2 * w;
                }
            }
        }
        (data_loss + l2 * self.weight_norm_sq(), grad)
    }

    pub fn params_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params_flat(&mut self, p: &[f64]) {
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = it.next().expect("parameter vector too short");
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MlpModel = serde_json::from_str(s)?;
        if m.format != FORMAT {
            return Err(Error::Data(format!("unsupported model format {:?}", m.format)));
        }
        let mut n_in = m.n_features;
        for l in &m.layers {
            if l.n_in != n_in || l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::Data("inconsistent layer shapes".into()));
            }
            n_in = l.n_out;
        }
        if n_in != 1 {
            return Err(Error::Data("network must end in a single output".into()));
        }
        Ok(m)
    }
}

/// Flattens parameter-shaped buffers, weights before bias per layer.
pub fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were restored.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Mean unweighted cross-entropy of the model on `x`.
pub fn cross_entropy(m: &MlpModel, x: &Matrix, y: &[bool]) -> f64 {
    let total: f64 = x
        .rows_iter()
        .zip(y)
        .map(|(r, &yi)| {
            let z = m.logit(r);
            if yi {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    total / y.len() as f64
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, model: &mut MlpModel, grad: &Gradients, cfg: &MlpConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        let mut k = 0;
        for (layer, g) in model.layers.iter_mut().zip(grad) {
            for (p, &gv) in layer
                .weights
                .iter_mut()
                .chain(layer.bias.iter_mut())
                .zip(g.weights.iter().chain(g.bias.iter()))
            {
                self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * gv;
                self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * gv * gv;
                let mhat = self.m[k] / bc1;
                let vhat = self.v[k] / bc2;
                *p -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
                k += 1;
            }
        }
    }
}

/// Trains with seeded per-epoch shuffling and early stopping on validation
/// cross-entropy; the returned model holds the best-epoch parameters.
pub fn train(
    x: &Matrix,
    y: &[bool],
    w: &[f64],
    x_val: &Matrix,
    y_val: &[bool],
    cfg: &MlpConfig,
) -> Result<(MlpModel, TrainingLog)> {
    cfg.validate()?;
    check_training_input(x, y, w)?;
    if x_val.n_rows() == 0 {
        return Err(Error::EmptyInput("validation set is empty"));
    }
    if x_val.n_rows() != y_val.len() {
        return Err(Error::LengthMismatch {
            left: x_val.n_rows(),
            right: y_val.len(),
        });
    }
    if x_val.n_cols() != x.n_cols() {
        return Err(Error::LengthMismatch {
            left: x_val.n_cols(),
            right: x.n_cols(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sizes = vec![x.n_cols()];
    sizes.extend(&cfg.hidden);
    sizes.push(1);
    let mut model = MlpModel::he_init(&sizes, x.manifest_hash(), &mut rng)?;
    let mut adam = Adam {
        m: vec![0.0; model.n_params()],
        v: vec![0.0; model.n_params()],
        t: 0,
    };

    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    let mut log = TrainingLog {
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        stopped_early: false,
    };
    let mut best = model.layers.clone();
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_weight = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bw: f64 = batch.iter().map(|&i| w[i]).sum();
            if bw <= 0.0 {
                continue;
            }
            let (loss, grad) = model.loss_and_gradient(x, y, w, batch, cfg.l2);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * bw;
            epoch_weight += bw;
            adam.step(&mut model, &grad, cfg);
        }
        let train_loss = epoch_loss / epoch_weight;
        let val_loss = cross_entropy(&model, x_val, y_val);
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < log.best_val_loss {
            log.best_val_loss = val_loss;
            log.best_epoch = epoch;
            best.clone_from(&model.layers);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    model.layers = best;
    log::debug!(
        "mlp: best epoch {} of {}, val loss {:.5}",
        log.best_epoch,
        log.epochs.len(),
        log.best_val_loss
    );
    Ok((model, log))
}

pub fn predict(m: &MlpModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.manifest_hash() != m.manifest_hash {
        return Err(Error::ManifestMismatch {
            expected: m.manifest_hash.clone(),
            actual: x.manifest_hash().to_string(),
        });
    }
    if x.n_cols() != m.n_features {
        return Err(Error::LengthMismatch {
            left: x.n_cols(),
            right: m.n_features,
        });
    }
    Ok(x.rows_iter().map(|r| sigmoid(m.logit(r))).collect())
}

/// Mean absolute first-layer weight per input, normalized to sum to one.
pub fn importance(m: &MlpModel) -> Vec<f64> {
    let first = &m.layers[0];
    let mut imp = vec![0.0; first.n_in];
    for row in first.weights.chunks_exact(first.n_in) {
        for (s, w) in imp.iter_mut().zip(row) {
            *s += w.abs();
        }
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        for v in imp.iter_mut() {
            *v /= total;
        }
    }
    imp
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_model(sizes: &[usize], seed: u64) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = MlpModel::zeros(sizes, "anonymous:2").unwrap();
        for l in &mut m.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        m
    }

    fn xor_data(n: usize, seed: u64) -> (Matrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let (a, b) = [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)][i % 4];
            rows.push(vec![a + rng.random_range(-0.1..0.1), b + rng.random_range(-0.1..0.1)]);
            y.push(i % 4 >= 2);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn zero_network_predicts_half() {
        let m = MlpModel::zeros(&[3, 4, 1], "anonymous:3").unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.0; 3]]).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn hand_computed_forward_pass() {
        let mut m = MlpModel::zeros(&[2, 2, 1], "anonymous:2").unwrap();
        m.layers[0].weights = vec![1.0, -1.0, 0.5, 2.0];
        m.layers[0].bias = vec![0.1, -0.2];
        m.layers[1].weights = vec![1.5, -0.5];
        m.layers[1].bias = vec![0.3];
        let x = Matrix::from_rows(&[vec![0.4, 0.9], vec![2.0, -1.0]]).unwrap();
        // row 0: h = relu(0.1 + 0.4 - 0.9, -0.2 + 0.2 + 1.8) = (0, 1.8)
        // row 1: h = relu(0.1 + 2 + 1, -0.2 + 1 - 2) = (3.1, 0)
        let z0: f64 = 0.3 - 0.5 * 1.8;
        let z1: f64 = 0.3 + 1.5 * 3.1;
        let p = predict(&m, &x).unwrap();
        assert!((p[0] - 1.0 / (1.0 + (-z0).exp())).abs() < 1e-12);
        assert!((p[1] - 1.0 / (1.0 + (-z1).exp())).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = xor_data(12, 4);
        let w: Vec<f64> = (0..12).map(|i| 0.5 + (i % 3) as f64).collect();
        let idx: Vec<usize> = vec![0, 3, 5, 6, 7, 10];
        for seed in [1, 2, 3] {
            let m = random_model(&[2, 3, 1], seed);
            let (_, grad) = m.loss_and_gradient(&x, &y, &w, &idx, 1e-3);
            let analytic = flatten(&grad);
            let p0 = m.params_flat();
            let step = 1e-6;
            for k in 0..p0.len() {
                let mut probe = m.clone();
                let mut p = p0.clone();
                p[k] += step;
                probe.set_params_flat(&p);
                let up = probe.loss_and_gradient(&x, &y, &w, &idx, 1e-3).0;
                p[k] -= 2.0 * step;
                probe.set_params_flat(&p);
                let down = probe.loss_and_gradient(&x, &y, &w, &idx, 1e-3).0;
                let numeric = (up - down) / (2.0 * step);
                let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-6);
                assert!(rel < 1e-4, "param {k}: {numeric} vs {}", analytic[k]);
            }
        }
    }

    #[test]
    fn weight_two_equals_duplication() {
        let (x, y) = xor_data(6, 8);
        let m = random_model(&[2, 3, 1], 11);
        let mut w = vec![1.0; 6];
        w[2] = 2.0;
        let all: Vec<usize> = (0..6).collect();
        let (_, g_weighted) = m.loss_and_gradient(&x, &y, &w, &all, 1e-4);
        let dup: Vec<usize> = vec![0, 1, 2, 2, 3, 4, 5];
        let (_, g_dup) = m.loss_and_gradient(&x, &y, &[1.0; 6], &dup, 1e-4);
        let cfg = MlpConfig::default();
        let mut a = m.clone();
        let mut b = m.clone();
        let n = m.n_params();
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }.step(&mut a, &g_weighted, &cfg);
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }.step(&mut b, &g_dup, &cfg);
        for (ga, gb) in flatten(&g_weighted).iter().zip(flatten(&g_dup)) {
            assert!((ga - gb).abs() < 1e-10);
        }
        for (pa, pb) in a.params_flat().iter().zip(b.params_flat()) {
            assert!((pa - pb).abs() < 1e-10);
        }
    }

    #[test]
    fn learns_xor_and_restores_best_epoch() {
        let (x, y) = xor_data(200, 2);
        let (xv, yv) = xor_data(40, 3);
        let w = vec![1.0; y.len()];
        let cfg = MlpConfig {
            max_epochs: 200,
            seed: 7,
            ..MlpConfig::default()
        };
        let (m, log) = train(&x, &y, &w, &xv, &yv, &cfg).unwrap();
        let p = predict(&m, &x).unwrap();
        let acc = p.iter().zip(&y).filter(|(&p, &t)| (p >= 0.5) == t).count() as f64 / y.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
        let min = log.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(log.best_val_loss, min);
        assert!((cross_entropy(&m, &xv, &yv) - min).abs() < 1e-12);

        let (m2, log2) = train(&x, &y, &w, &xv, &yv, &cfg).unwrap();
        assert_eq!(log, log2);
        assert_eq!(m, m2);
    }

    #[test]
    fn batch_partitioning_does_not_change_predictions() {
        let m = random_model(&[2, 5, 3, 1], 21);
        let (x, _) = xor_data(10, 1);
        let full = predict(&m, &x).unwrap();
        let first = predict(&m, &x.select_rows(&[0, 1, 2, 3])).unwrap();
        let rest = predict(&m, &x.select_rows(&[4, 5, 6, 7, 8, 9])).unwrap();
        assert_eq!(full, [first, rest].concat());
    }

    #[test]
    fn importance_properties() {
        let mut m = random_model(&[2, 4, 1], 5);
        for row in m.layers[0].weights.chunks_exact_mut(2) {
            row[1] = 0.0;
        }
        let imp = importance(&m);
        assert_eq!(imp[1], 0.0);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_feature_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let gen = |rng: &mut ChaCha8Rng, n: usize| {
            let mut rows = Vec::new();
            let mut y = Vec::new();
            for _ in 0..n {
                let r: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                y.push(r[3] > 0.0);
                rows.push(r);
            }
            (Matrix::from_rows(&rows).unwrap(), y)
        };
        let (x, y) = gen(&mut rng, 300);
        let (xv, yv) = gen(&mut rng, 60);
        let cfg = MlpConfig {
            hidden: vec![16, 8],
            max_epochs: 150,
            l2: 1e-3,
            ..MlpConfig::default()
        };
        let (m, _) = train(&x, &y, &vec![1.0; 300], &xv, &yv, &cfg).unwrap();
        let imp = importance(&m);
        let top = (0..6).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
        assert_eq!(top, 3, "{imp:?}");
    }

    #[test]
    fn json_round_trip_and_errors() {
        let m = random_model(&[2, 3, 1], 9);
        assert_eq!(MlpModel::from_json(&m.to_json()).unwrap(), m);
        let (x, y) = xor_data(8, 1);
        let (xv, yv) = xor_data(4, 2);
        assert!(matches!(
            train(&x, &[true; 8], &[1.0; 8], &xv, &yv, &MlpConfig::default()),
            Err(Error::DegenerateLabels)
        ));
        let empty = Matrix::new(0, 2, vec![]).unwrap();
        assert!(train(&x, &y, &[1.0; 8], &empty, &[], &MlpConfig::default()).is_err());
        let mut bad = m.clone();
        bad.manifest_hash = "x".into();
        assert!(matches!(predict(&bad, &x), Err(Error::ManifestMismatch { .. })));
    }
}
