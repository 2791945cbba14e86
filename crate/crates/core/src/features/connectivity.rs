//! Pearson correlation between the bipolar channels of one window.

use serde::Serialize;

use crate::stats::{is_constant, mean};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Connectivity {
    pub n_channels: usize,
    /// Row-major `n x n`; `None` on rows/columns of constant channels.
    pub rho: Vec<Option<f64>>,
    /// Mean |rho| of each channel to every other (defined) channel.
    pub node_strength: Vec<Option<f64>>,
    /// Mean of rho over the defined unordered off-diagonal pairs.
    pub global_mean: Option<f64>,
    /// Population standard deviation of the same values.
    pub global_std: Option<f64>,
}

impl Connectivity {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.rho[i * self.n_channels + j]
    }
}

pub fn connectivity(channels: &[&[f64]]) -> Connectivity {
    let n = channels.len();
    let centered: Vec<Option<Vec<f64>>> = channels
        .iter()
        .map(|x| {
            if is_constant(x) {
                None
            } else {
                let m = mean(x);
                Some(x.iter().map(|v| v - m).collect())
            }
        })
        .collect();
    let sum_sq: Vec<Option<f64>> = centered
        .iter()
        .map(|c| c.as_ref().map(|c| c.iter().map(|v| v * v).sum::<f64>()))
        .collect();

    let mut rho = vec![None; n * n];
    for i in 0..n {
        let (Some(ci), Some(si)) = (&centered[i], sum_sq[i]) else {
            continue;
        };
        rho[i * n + i] = Some(1.0);
        for j in (i + 1)..n {
            let (Some(cj), Some(sj)) = (&centered[j], sum_sq[j]) else {
                continue;
            };
            let sxy: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            let r = (sxy / (si * sj).sqrt()).clamp(-1.0, 1.0);
            rho[i * n + j] = Some(r);
            rho[j * n + i] = Some(r);
        }
    }

    let node_strength = (0..n)
        .map(|i| {
            let vals: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| rho[i * n + j])
                .map(f64::abs)
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();

    let pairs: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| rho[i * n + j])
        .collect();
    let (global_mean, global_std) = if pairs.is_empty() {
        (None, None)
    } else {
        let m = mean(&pairs);
        let var = pairs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / pairs.len() as f64;
        (Some(m), Some(var.sqrt()))
    };

    Connectivity {
        n_channels: n,
        rho,
        node_strength,
        global_mean,
        global_std,
    }
}
