//! Non-overlapping fixed-duration windows aligned to sample 0. The trailing
//! partial window is discarded.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montage::BipolarRecording;

pub const DEFAULT_WINDOW_S: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPlan {
    pub window_s: f64,
    pub n_windows: usize,
    pub samples_per_window: usize,
    pub discarded_tail_samples: usize,
}

impl WindowPlan {
    pub fn new(n_samples: usize, fs: f64, window_s: f64) -> Result<Self> {
        if !(window_s.is_finite() && window_s > 0.0 && fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "window {window_s} s at {fs} Hz"
            )));
        }
        let samples_per_window = (window_s * fs).round() as usize;
        if samples_per_window == 0 {
            return Err(Error::InvalidConfig(format!(
                "window {window_s} s is shorter than one sample"
            )));
        }
        let n_windows = n_samples / samples_per_window;
        if n_windows == 0 {
            return Err(Error::TooShort {
                duration_s: n_samples as f64 / fs,
                required_s: window_s,
            });
        }
        Ok(Self {
            window_s,
            n_windows,
            samples_per_window,
            discarded_tail_samples: n_samples - n_windows * samples_per_window,
        })
    }

    pub fn range(&self, w: usize) -> std::ops::Range<usize> {
        let start = w * self.samples_per_window;
        start..start + self.samples_per_window
    }
}

/// One window across all bipolar channels, borrowed from the recording.
#[derive(Debug, Clone)]
pub struct Window<'a> {
    pub index: usize,
    pub fs: f64,
    pub channels: Vec<&'a [f64]>,
}

impl Window<'_> {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn plan(b: &BipolarRecording, window_s: f64) -> Result<WindowPlan> {
    WindowPlan::new(b.n_samples(), b.fs, window_s)
}

pub fn segment(b: &BipolarRecording, window_s: f64) -> Result<Vec<Window<'_>>> {
    let plan = plan(b, window_s)?;
    Ok((0..plan.n_windows)
        .map(|w| Window {
            index: w,
            fs: b.fs,
            channels: b.channels.iter().map(|c| &c[plan.range(w)]).collect(),
        })
        .collect())
}
