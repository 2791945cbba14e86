//! Per-window feature extraction.
//!
//! Every window yields a [`WindowFeatureBlock`] of fixed layout: the 32
//! per-channel features of [`CHANNEL_FEATURES`] for each of the 16 bipolar
//! channels (channel-major), then the 16 connectivity node strengths, then the
//! global mean and standard deviation of the pairwise correlations.

pub mod connectivity;
pub mod spectral;
pub mod time;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montage::{BipolarRecording, N_BIPOLAR};
use crate::segmentation::{segment, Window};

pub use connectivity::{connectivity, Connectivity};
pub use spectral::{
    band_powers, band_ratios, sef95, spectral_entropy, welch_psd, Band, BandDefinition,
    BandPowers, BandSet, Psd, WelchConfig, WelchEstimator,
};
pub use time::{hjorth, line_length, shannon_entropy, time_stats, zero_crossing_rate};

pub const CHANNEL_FEATURES: [&str; 32] = [
    "mean",
    "variance",
    "skewness",
    "kurtosis",
    "rms",
    "total_energy",
    "percentile_5",
    "percentile_25",
    "percentile_50",
    "percentile_75",
    "percentile_95",
    "line_length",
    "zero_crossing_rate",
    "hjorth_activity",
    "hjorth_mobility",
    "hjorth_complexity",
    "shannon_entropy",
    "delta_absolute_power",
    "theta_absolute_power",
    "alpha_absolute_power",
    "beta_absolute_power",
    "gamma_absolute_power",
    "delta_relative_power",
    "theta_relative_power",
    "alpha_relative_power",
    "beta_relative_power",
    "gamma_relative_power",
    "total_power",
    "spectral_entropy",
    "sef95",
    "theta_alpha_ratio",
    "beta_gamma_alpha_ratio",
];

pub const N_CHANNEL_FEATURES: usize = CHANNEL_FEATURES.len();
pub const GLOBAL_FEATURES: [&str; 2] = ["global_mean_correlation", "global_std_correlation"];
pub const BLOCK_LEN: usize = N_CHANNEL_FEATURES * N_BIPOLAR + N_BIPOLAR + GLOBAL_FEATURES.len();

/// Index of a per-channel feature within the channel's 32 values.
pub fn channel_feature_index(name: &str) -> Option<usize> {
    CHANNEL_FEATURES.iter().position(|&f| f == name)
}

/// Names of the block entries in block order, e.g. `Ch3_sef95`.
pub fn window_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(BLOCK_LEN);
    for ch in 1..=N_BIPOLAR {
        for f in CHANNEL_FEATURES {
            names.push(format!("Ch{ch}_{f}"));
        }
    }
    for ch in 1..=N_BIPOLAR {
        names.push(format!("Ch{ch}_node_strength"));
    }
    names.extend(GLOBAL_FEATURES.iter().map(|s| s.to_string()));
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub bands: BandSet,
    pub welch: WelchConfig,
    pub entropy_bins: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            bands: BandSet::default(),
            welch: WelchConfig::default(),
            entropy_bins: 64,
        }
    }
}

/// Feature values of one window; `None` marks an undefined computation.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatureBlock {
    pub values: Vec<Option<f64>>,
}

impl WindowFeatureBlock {
    /// `channel` is 0-based.
    pub fn channel_value(&self, channel: usize, feature: &str) -> Option<f64> {
        let f = channel_feature_index(feature).expect("known feature name");
        self.values[channel * N_CHANNEL_FEATURES + f]
    }

    pub fn node_strength(&self, channel: usize) -> Option<f64> {
        self.values[N_CHANNEL_FEATURES * N_BIPOLAR + channel]
    }

    pub fn global_mean_correlation(&self) -> Option<f64> {
        self.values[BLOCK_LEN - 2]
    }

    pub fn global_std_correlation(&self) -> Option<f64> {
        self.values[BLOCK_LEN - 1]
    }
}

/// Feature engine bound to one sampling rate.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    fs: f64,
    config: FeatureConfig,
    welch: WelchEstimator,
}

impl FeatureExtractor {
    pub fn new(fs: f64, config: FeatureConfig) -> Result<Self> {
        config.bands.validate()?;
        if config.entropy_bins == 0 {
            return Err(Error::InvalidConfig("entropy_bins must be positive".into()));
        }
        if config.bands.total_hi() > fs / 2.0 {
            return Err(Error::SamplingRateTooLow {
                fs,
                min: 2.0 * config.bands.total_hi(),
            });
        }
        let welch = WelchEstimator::new(fs, &config.welch)?;
        Ok(Self { fs, config, welch })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn welch(&self) -> &WelchEstimator {
        &self.welch
    }

    /// The 32 per-channel values in [`CHANNEL_FEATURES`] order.
    pub fn channel_features(&self, w: &[f64]) -> Result<[Option<f64>; N_CHANNEL_FEATURES]> {
        let ts = time_stats(w);
        let hj = hjorth(w);
        let psd = self.welch.estimate(w)?;
        let bands = &self.config.bands;
        let bp = band_powers(&psd, bands);
        let (lo, hi) = (bands.total_lo(), bands.total_hi());
        let ratios = band_ratios(&bp.absolute);
        let mut out = [None; N_CHANNEL_FEATURES];
        let fixed = [
            ts.mean,
            ts.variance,
            ts.skewness,
            ts.kurtosis,
            ts.rms,
            ts.total_energy,
            ts.percentiles[0],
            ts.percentiles[1],
            ts.percentiles[2],
            ts.percentiles[3],
            ts.percentiles[4],
            line_length(w),
            zero_crossing_rate(w, self.fs),
            hj.activity,
        ];
        for (o, v) in out.iter_mut().zip(fixed) {
            *o = Some(v);
        }
        out[14] = hj.mobility;
        out[15] = hj.complexity;
        out[16] = Some(shannon_entropy(w, self.config.entropy_bins));
        for b in 0..5 {
            out[17 + b] = Some(bp.absolute[b]);
            out[22 + b] = bp.relative[b];
        }
        out[27] = Some(bp.total);
        out[28] = spectral_entropy(&psd, lo, hi);
        out[29] = sef95(&psd, lo, hi);
        out[30] = ratios.theta_alpha;
        out[31] = ratios.beta_gamma_alpha;
        // no NaN or infinity escapes as a value
        for v in out.iter_mut() {
            if matches!(v, Some(x) if !x.is_finite()) {
                *v = None;
            }
        }
        Ok(out)
    }

    pub fn extract_window_features(&self, window: &Window<'_>) -> Result<WindowFeatureBlock> {
        if window.channels.len() != N_BIPOLAR {
            return Err(Error::LengthMismatch {
                left: window.channels.len(),
                right: N_BIPOLAR,
            });
        }
        let per_channel: Vec<[Option<f64>; N_CHANNEL_FEATURES]> = window
            .channels
            .par_iter()
            .map(|c| self.channel_features(c))
            .collect::<Result<_>>()?;
        let conn = connectivity(&window.channels);
        let mut values = Vec::with_capacity(BLOCK_LEN);
        for ch in &per_channel {
            values.extend_from_slice(ch);
        }
        values.extend_from_slice(&conn.node_strength);
        values.push(conn.global_mean);
        values.push(conn.global_std);
        debug_assert_eq!(values.len(), BLOCK_LEN);
        Ok(WindowFeatureBlock { values })
    }

    /// Segments a bipolar recording and extracts one block per window.
    pub fn extract_recording(
        &self,
        b: &BipolarRecording,
        window_s: f64,
    ) -> Result<Vec<WindowFeatureBlock>> {
        if (b.fs - self.fs).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "extractor built for {} Hz, recording is {} Hz",
                self.fs, b.fs
            )));
        }
        segment(b, window_s)?
            .iter()
            .map(|w| self.extract_window_features(w))
            .collect()
    }
}

/// Convenience form using [`FeatureConfig::default`].
pub fn extract_window_features(
    window: &Window<'_>,
    config: &FeatureConfig,
) -> Result<WindowFeatureBlock> {
    FeatureExtractor::new(window.fs, *config)?.extract_window_features(window)
}
