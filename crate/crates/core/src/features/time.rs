//! Time-domain features of a single window.

use serde::Serialize;

use crate::stats::{is_constant, mean, percentile_sorted, sorted_copy, variance};

pub const PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeStats {
    pub mean: f64,
    pub variance: f64,
    /// Zero for constant windows.
    pub skewness: f64,
    /// Excess kurtosis; zero for constant windows.
    pub kurtosis: f64,
    pub rms: f64,
    pub total_energy: f64,
    /// At [`PERCENTILES`].
    pub percentiles: [f64; 5],
}

pub fn time_stats(w: &[f64]) -> TimeStats {
    let n = w.len() as f64;
    let m = mean(w);
    let total_energy: f64 = w.iter().map(|v| v * v).sum();
    let rms = (total_energy / n).sqrt();
    let sorted = sorted_copy(w);
    let percentiles = PERCENTILES.map(|p| percentile_sorted(&sorted, p));
    if is_constant(w) {
        return TimeStats {
            mean: w[0],
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            rms: w[0].abs(),
            total_energy,
            percentiles,
        };
    }
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in w {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    TimeStats {
        mean: m,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
        rms,
        total_energy,
        percentiles,
    }
}

/// Sum of absolute successive differences.
pub fn line_length(w: &[f64]) -> f64 {
    w.windows(2).map(|p| (p[1] - p[0]).abs()).sum()
}

/// Sign changes of the mean-removed signal per second. Exact zeros take the
/// sign of the preceding sample.
pub fn zero_crossing_rate(w: &[f64], fs: f64) -> f64 {
    if is_constant(w) {
        return 0.0;
    }
    let m = mean(w);
    let mut prev: Option<bool> = None;
    let mut crossings = 0usize;
    for v in w {
        let d = v - m;
        let sign = if d > 0.0 {
            Some(true)
        } else if d < 0.0 {
            Some(false)
        } else {
            prev
        };
        if let (Some(p), Some(s)) = (prev, sign) {
            if p != s {
                crossings += 1;
            }
        }
        prev = sign;
    }
    crossings as f64 / (w.len() as f64 / fs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hjorth {
    pub activity: f64,
    pub mobility: Option<f64>,
    pub complexity: Option<f64>,
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|p| p[1] - p[0]).collect()
}

fn guarded_variance(x: &[f64]) -> Option<f64> {
    if is_constant(x) {
        return None;
    }
    let v = variance(x);
    (v > 0.0).then_some(v)
}

pub fn hjorth(w: &[f64]) -> Hjorth {
    let activity = if is_constant(w) { 0.0 } else { variance(w) };
    let d1 = diff(w);
    let d2 = diff(&d1);
    let var0 = guarded_variance(w);
    let var1 = guarded_variance(&d1);
    let var2 = guarded_variance(&d2);
    let mobility = var0.map(|v0| (var1.unwrap_or(0.0) / v0).sqrt());
    let complexity = match (var0, var1, var2) {
        (Some(v0), Some(v1), v2) => {
            let mob = (v1 / v0).sqrt();
            let mob_d = (v2.unwrap_or(0.0) / v1).sqrt();
            Some(mob_d / mob)
        }
        _ => None,
    };
    Hjorth {
        activity,
        mobility,
        complexity,
    }
}

/// Shannon entropy in bits of a `bins`-bin equal-width histogram spanning the
/// window's own range.
pub fn shannon_entropy(w: &[f64], bins: usize) -> f64 {
    if w.is_empty() || is_constant(w) {
        return 0.0;
    }
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let width = hi - lo;
    let mut counts = vec![0usize; bins];
    for &v in w {
        let k = (((v - lo) / width) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let n = w.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}
