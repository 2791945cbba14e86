//! Welch power spectral density and the band-limited summaries derived from
//! it.
//!
//! Integrals over the spectrum use the exact integral of the piecewise-linear
//! interpolant through the PSD bins (the trapezoidal rule, extended to band
//! edges that fall between bins), so adjacent bands add up exactly to the
//! total.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub band: Band,
    pub lo: f64,
    pub hi: f64,
}

/// Five contiguous bands, delta through gamma, partitioning the total range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    pub bands: [BandDefinition; 5],
}

impl Default for BandSet {
    fn default() -> Self {
        let b = |band, lo, hi| BandDefinition { band, lo, hi };
        Self {
            bands: [
                b(Band::Delta, 0.5, 4.0),
                b(Band::Theta, 4.0, 8.0),
                b(Band::Alpha, 8.0, 13.0),
                b(Band::Beta, 13.0, 30.0),
                b(Band::Gamma, 30.0, 45.0),
            ],
        }
    }
}

impl BandSet {
    pub fn validate(&self) -> Result<()> {
        for (i, def) in self.bands.iter().enumerate() {
            if def.band != Band::ALL[i] {
                return Err(Error::InvalidConfig(format!(
                    "band {i} must be {}",
                    Band::ALL[i].name()
                )));
            }
            if !(def.lo.is_finite() && def.hi.is_finite() && def.lo >= 0.0 && def.hi > def.lo) {
                return Err(Error::InvalidConfig(format!(
                    "band {} has edges [{}, {})",
                    def.band.name(),
                    def.lo,
                    def.hi
                )));
            }
            if i > 0 && self.bands[i - 1].hi != def.lo {
                return Err(Error::InvalidConfig(format!(
                    "bands {} and {} are not contiguous",
                    self.bands[i - 1].band.name(),
                    def.band.name()
                )));
            }
        }
        Ok(())
    }

    pub fn total_lo(&self) -> f64 {
        self.bands[0].lo
    }

    pub fn total_hi(&self) -> f64 {
        self.bands[4].hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_s: f64,
    /// Fraction of a segment shared with the next one.
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_s: 4.0,
            overlap: 0.5,
        }
    }
}

/// One-sided power spectral density on a uniform grid `k * df`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub df: f64,
    pub density: Vec<f64>,
}

impl Psd {
    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.df
    }

    pub fn max_freq(&self) -> f64 {
        self.freq(self.density.len() - 1)
    }

    fn value_at(&self, f: f64) -> f64 {
        let pos = f / self.df;
        let k = (pos.floor() as usize).min(self.density.len() - 1);
        if k + 1 >= self.density.len() {
            return self.density[k];
        }
        let t = pos - k as f64;
        self.density[k] + (self.density[k + 1] - self.density[k]) * t
    }

    /// Integral of the linear interpolant over [lo, hi].
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let hi = hi.min(self.max_freq());
        if hi <= lo {
            return 0.0;
        }
        let first = (lo / self.df).floor() as usize;
        let mut total = 0.0;
        let mut k = first;
        while k + 1 < self.density.len() {
            let (f0, f1) = (self.freq(k), self.freq(k + 1));
            if f0 >= hi {
                break;
            }
            let a = f0.max(lo);
            let b = f1.min(hi);
            if b > a {
                let sa = if a == f0 { self.density[k] } else { self.value_at(a) };
                let sb = if b == f1 { self.density[k + 1] } else { self.value_at(b) };
                total += 0.5 * (b - a) * (sa + sb);
            }
            k += 1;
        }
        total
    }

    /// Indices of bins whose frequency lies in [lo, hi].
    pub fn bins_in(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let first = (lo / self.df).ceil() as usize;
        let last = ((hi / self.df).floor() as usize).min(self.density.len() - 1);
        first..=last
    }
}

/// Welch estimator with a fixed segment length and a cached FFT plan.
#[derive(Clone)]
pub struct WelchEstimator {
    fs: f64,
    nperseg: usize,
    step: usize,
    taper: Vec<f64>,
    taper_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for WelchEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WelchEstimator")
            .field("fs", &self.fs)
            .field("nperseg", &self.nperseg)
            .field("step", &self.step)
            .finish()
    }
}

/// Periodic Hann taper.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

impl WelchEstimator {
    pub fn new(fs: f64, cfg: &WelchConfig) -> Result<Self> {
        if !(cfg.segment_s > 0.0 && (0.0..1.0).contains(&cfg.overlap)) {
            return Err(Error::InvalidConfig(format!("welch {cfg:?}")));
        }
        let nperseg = (cfg.segment_s * fs).round() as usize;
        if nperseg < 2 {
            return Err(Error::InvalidConfig(format!(
                "welch segment of {nperseg} samples"
            )));
        }
        let noverlap = (cfg.overlap * nperseg as f64).floor() as usize;
        let taper = hann(nperseg);
        let taper_power = taper.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(nperseg);
        Ok(Self {
            fs,
            nperseg,
            step: nperseg - noverlap,
            taper,
            taper_power,
            fft,
        })
    }

    pub fn nperseg(&self) -> usize {
        self.nperseg
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Averaged density-scaled periodograms of all complete segments.
    pub fn estimate(&self, x: &[f64]) -> Result<Psd> {
        let n = self.nperseg;
        if x.len() < n {
            return Err(Error::SegmentTooLong {
                window: x.len(),
                segment: n,
            });
        }
        let n_bins = n / 2 + 1;
        let mut acc = vec![0.0; n_bins];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut segments = 0usize;
        let mut start = 0;
        while start + n <= x.len() {
            for ((b, &v), &w) in buf.iter_mut().zip(&x[start..start + n]).zip(&self.taper) {
                *b = Complex::new(v * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, c) in acc.iter_mut().zip(&buf[..n_bins]) {
                *a += c.norm_sqr();
            }
            segments += 1;
            start += self.step;
        }
        let scale = 1.0 / (self.fs * self.taper_power * segments as f64);
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) { 1.0 } else { 2.0 };
            *a *= scale * one_sided;
        }
        Ok(Psd {
            df: self.fs / n as f64,
            density: acc,
        })
    }
}

/// Welch PSD with the default 4 s Hann segments and 50% overlap.
pub fn welch_psd(w: &[f64], fs: f64) -> Result<Psd> {
    WelchEstimator::new(fs, &WelchConfig::default())?.estimate(w)
}

pub const MIN_TOTAL_POWER: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPowers {
    pub absolute: [f64; 5],
    /// Missing when the total power is (numerically) zero.
    pub relative: [Option<f64>; 5],
    pub total: f64,
}

pub fn band_powers(psd: &Psd, bands: &BandSet) -> BandPowers {
    let absolute = bands.bands.map(|b| psd.integrate(b.lo, b.hi));
    let total = psd.integrate(bands.total_lo(), bands.total_hi());
    let relative = if total < MIN_TOTAL_POWER {
        [None; 5]
    } else {
        absolute.map(|p| Some(p / total))
    };
    BandPowers {
        absolute,
        relative,
        total,
    }
}

/// Normalized Shannon entropy of the spectrum restricted to [lo, hi].
pub fn spectral_entropy(psd: &Psd, lo: f64, hi: f64) -> Option<f64> {
    let bins = psd.bins_in(lo, hi);
    let values = &psd.density[bins];
    if values.len() < 2 {
        return None;
    }
    let sum: f64 = values.iter().sum();
    if sum < MIN_TOTAL_POWER {
        return None;
    }
    let h: f64 = -values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / sum;
            p * p.log2()
        })
        .sum::<f64>();
    Some(h / (values.len() as f64).log2())
}

/// Frequency below which `fraction` of the [lo, hi] power lies: the upper
/// edge of the first grid interval where the cumulative integral reaches it.
pub fn spectral_edge(psd: &Psd, lo: f64, hi: f64, fraction: f64) -> Option<f64> {
    let total = psd.integrate(lo, hi);
    if total < MIN_TOTAL_POWER {
        return None;
    }
    let target = fraction * total;
    let mut cum = 0.0;
    let mut edge = lo;
    let mut k = (lo / psd.df).floor() as usize + 1;
    while edge < hi {
        let next = psd.freq(k).min(hi);
        cum += psd.integrate(edge, next);
        edge = next;
        if cum >= target {
            return Some(edge);
        }
        k += 1;
    }
    Some(hi)
}

pub fn sef95(psd: &Psd, lo: f64, hi: f64) -> Option<f64> {
    spectral_edge(psd, lo, hi, 0.95)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRatios {
    pub theta_alpha: Option<f64>,
    pub beta_gamma_alpha: Option<f64>,
}

/// Ratios of absolute band powers; missing when alpha power is negligible.
pub fn band_ratios(absolute: &[f64; 5]) -> BandRatios {
    let [_, theta, alpha, beta, gamma] = *absolute;
    if alpha < MIN_TOTAL_POWER {
        return BandRatios {
            theta_alpha: None,
            beta_gamma_alpha: None,
        };
    }
    BandRatios {
        theta_alpha: Some(theta / alpha),
        beta_gamma_alpha: Some((beta + gamma) / alpha),
    }
}
