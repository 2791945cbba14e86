//! Clinical EEG screening pipeline.
//!
//! Raw EDF recordings are converted into 16-channel longitudinal bipolar
//! derivations, cut into fixed windows, summarized by time, spectral and
//! connectivity features, aggregated to one vector per recording, and fed to
//! per-disorder binary classifiers (boosted trees or an MLP) whose decision
//! thresholds are calibrated to meet a recall target.

// Validation rejects NaN with `!(x > 0.0)`-style checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod analysis;
pub mod calibration;
pub mod cli;
pub mod edf;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod gbdt;
pub mod labels;
pub mod linalg;
pub mod mlp;
pub mod model;
pub mod montage;
pub mod segmentation;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
