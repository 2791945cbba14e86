//! Seeded synthetic EEG corpus with planted disorder signatures.
//!
//! Each electrode carries 1/f background noise, part of it shared with its
//! neighbours through a few spatially smooth latent sources, plus theta,
//! alpha and beta rhythms with randomized frequency and topography. Positive
//! recordings receive their disorder's signature scaled by a per-recording
//! severity. Every signature is spatially non-uniform so it survives bipolar
//! differencing.
//!
//! Corpus-level draws (sessions, durations, labels) use stream 0 of the seeded
//! generator; recording `i` is synthesized from stream `i + 1`, so parallel
//! generation is reproducible.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::edf::{write_edf, Channel, EdfWriteOptions, Electrode, Recording};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signature {
    /// Focal bursts of 30-45 Hz activity; `rate_hz` bursts per second with
    /// amplitude `gain` times the background level.
    GammaBurst { rate_hz: f64, gain: f64 },
    /// Theta amplitude multiplied and alpha amplitude divided by `ratio`.
    ThetaAlphaShift { ratio: f64 },
    /// Added 1-3.5 Hz activity at `gain` times the background level.
    DiffuseSlowing { gain: f64 },
    /// Fraction of the shared background replaced by independent noise.
    ConnectivityDrop { damping: f64 },
}

impl Signature {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Signature::GammaBurst { rate_hz, gain } => rate_hz >= 0.0 && gain >= 0.0,
            Signature::ThetaAlphaShift { ratio } => ratio > 0.0,
            Signature::DiffuseSlowing { gain } => gain >= 0.0,
            Signature::ConnectivityDrop { damping } => (0.0..=1.0).contains(&damping),
        };
        if ok && self.strength().is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid signature parameters {self:?}")))
        }
    }

    fn strength(&self) -> f64 {
        match *self {
            Signature::GammaBurst { rate_hz, gain } => rate_hz * gain,
            Signature::ThetaAlphaShift { ratio } => ratio,
            Signature::DiffuseSlowing { gain } => gain,
            Signature::ConnectivityDrop { damping } => damping,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub name: String,
    pub prevalence: f64,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_patients: usize,
    /// Inclusive range of sessions per patient.
    pub sessions_per_patient: (usize, usize),
    /// When set, sessions are distributed so the corpus has exactly this
    /// many recordings.
    pub total_recordings: Option<usize>,
    /// Inclusive range of recording durations, whole seconds.
    pub duration_s: (f64, f64),
    pub fs: f64,
    pub disorders: Vec<DisorderSpec>,
    /// Positive recordings draw a severity uniformly from this range.
    pub severity: (f64, f64),
    /// Background RMS in microvolts.
    pub background_uv: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 60,
            sessions_per_patient: (2, 5),
            total_recordings: Some(200),
            duration_s: (120.0, 180.0),
            fs: 256.0,
            disorders: vec![
                DisorderSpec {
                    name: "seizure".into(),
                    prevalence: 0.5,
                    signature: Signature::GammaBurst {
                        rate_hz: 0.5,
                        gain: 4.0,
                    },
                },
                DisorderSpec {
                    name: "cerebrovascular".into(),
                    prevalence: 0.08,
                    signature: Signature::DiffuseSlowing { gain: 0.6 },
                },
            ],
            severity: (0.4, 1.0),
            background_uv: 15.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("synth: {m}")));
        if self.n_patients == 0 {
            return bad("n_patients must be positive".into());
        }
        let (smin, smax) = self.sessions_per_patient;
        if smin == 0 || smin > smax {
            return bad(format!("bad session range {smin}..={smax}"));
        }
        if let Some(total) = self.total_recordings {
            if total < self.n_patients * smin || total > self.n_patients * smax {
                return bad(format!("{total} recordings cannot be spread over {} patients", self.n_patients));
            }
        }
        let (dmin, dmax) = self.duration_s;
        if !(dmin >= 60.0 && dmin <= dmax && dmax.is_finite()) {
            return bad(format!("durations must be at least 60 s, got {dmin}..={dmax}"));
        }
        if !(self.fs >= 96.0 && self.fs.fract() == 0.0) {
            return bad(format!("fs must be a whole number of Hz >= 96, got {}", self.fs));
        }
        if !(self.severity.0 >= 0.0 && self.severity.0 <= self.severity.1) {
            return bad("bad severity range".into());
        }
        if !(self.background_uv > 0.0) {
            return bad("background_uv must be positive".into());
        }
        let mut names: Vec<&str> = self.disorders.iter().map(|d| d.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.disorders.len() {
            return bad("disorder names must be unique".into());
        }
        for d in &self.disorders {
            if !(d.prevalence > 0.0 && d.prevalence < 1.0) {
                return bad(format!("prevalence of {} must lie in (0, 1)", d.name));
            }
            if d.name.is_empty() || d.name.contains([',', '"', '\n']) {
                return bad(format!("unusable disorder name {:?}", d.name));
            }
            d.signature.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRecording {
    pub index: usize,
    pub patient_id: String,
    pub session_id: String,
    pub duration_s: f64,
    pub labels: Vec<bool>,
    /// Severity per disorder; 0 for negatives.
    pub severity: Vec<f64>,
}

impl PlannedRecording {
    pub fn recording_id(&self) -> String {
        format!("{}_{}", self.patient_id, self.session_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPlan {
    pub disorders: Vec<String>,
    pub recordings: Vec<PlannedRecording>,
}

pub fn patient_id(i: usize) -> String {
    format!("P{:03}", i + 1)
}

/// Draws sessions, durations, labels and severities.
pub fn plan_corpus(cfg: &SynthConfig) -> Result<CorpusPlan> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (smin, smax) = cfg.sessions_per_patient;
    let mut sessions: Vec<usize> = match cfg.total_recordings {
        Some(total) => {
            let mut s = vec![smin; cfg.n_patients];
            let mut extra = total - smin * cfg.n_patients;
            while extra > 0 {
                let p = rng.random_range(0..cfg.n_patients);
                if s[p] < smax {
                    s[p] += 1;
                    extra -= 1;
                }
            }
            s
        }
        None => (0..cfg.n_patients).map(|_| rng.random_range(smin..=smax)).collect(),
    };
    let (dmin, dmax) = (cfg.duration_s.0.ceil() as u64, cfg.duration_s.1.floor() as u64);
    let mut recordings = Vec::new();
    for (p, n) in sessions.iter_mut().enumerate() {
        for s in 0..*n {
            let duration_s = rng.random_range(dmin..=dmax) as f64;
            let mut labels = Vec::with_capacity(cfg.disorders.len());
            let mut severity = Vec::with_capacity(cfg.disorders.len());
            for d in &cfg.disorders {
                let pos = rng.random_bool(d.prevalence);
                let sev = rng.random_range(cfg.severity.0..=cfg.severity.1);
                labels.push(pos);
                severity.push(if pos { sev } else { 0.0 });
            }
            recordings.push(PlannedRecording {
                index: recordings.len(),
                patient_id: patient_id(p),
                session_id: format!("S{}", s + 1),
                duration_s,
                labels,
                severity,
            });
        }
    }
    Ok(CorpusPlan {
        disorders: cfg.disorders.iter().map(|d| d.name.clone()).collect(),
        recordings,
    })
}

/// Approximate scalp position (x to the right, y to the nose) on the unit disc.
pub fn electrode_position(e: Electrode) -> (f64, f64) {
    use Electrode::*;
    match e {
        Fp1 => (-0.31, 0.95),
        Fpz => (0.0, 1.0),
        Fp2 => (0.31, 0.95),
        F7 => (-0.81, 0.59),
        F3 => (-0.4, 0.5),
        Fz => (0.0, 0.45),
        F4 => (0.4, 0.5),
        F8 => (0.81, 0.59),
        T3 => (-1.0, 0.0),
        C3 => (-0.5, 0.0),
        Cz => (0.0, 0.0),
        C4 => (0.5, 0.0),
        T4 => (1.0, 0.0),
        T5 => (-0.81, -0.59),
        P3 => (-0.4, -0.5),
        Pz => (0.0, -0.45),
        P4 => (0.4, -0.5),
        T6 => (0.81, -0.59),
        O1 => (-0.31, -0.95),
        Oz => (0.0, -1.0),
        O2 => (0.31, -0.95),
        A1 => (-1.1, -0.2),
        A2 => (1.1, -0.2),
    }
}

fn gaussian_weight(a: (f64, f64), b: (f64, f64), width: f64) -> f64 {
    let d2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    (-d2 / (2.0 * width * width)).exp()
}

/// Unit-variance noise with power spectral density proportional to 1/f.
pub fn pink_noise(n: usize, fs: f64, rng: &mut ChaCha8Rng, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample(StandardNormal), 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = fs / n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = k.min(n - k);
        *c = if kk == 0 {
            Complex::new(0.0, 0.0)
        } else {
            *c / (kk as f64 * df).sqrt()
        };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let m = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
    for v in x.iter_mut() {
        *v = (*v - m) / sd;
    }
    x
}

/// Sinusoid with slowly wandering amplitude (0.5..1.5 envelope).
fn rhythm(n: usize, fs: f64, freq: f64, phase: f64, env_phase: f64, env_hz: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |t| {
        let s = t as f64 / fs;
        let env = 1.0 + 0.5 * (2.0 * PI * env_hz * s + env_phase).sin();
        env * (2.0 * PI * freq * s + phase).sin()
    })
}

const SHARED_SOURCES: usize = 3;

/// Synthesizes one referential recording of the standard 19 electrodes.
pub fn generate_recording(cfg: &SynthConfig, rec: &PlannedRecording) -> Result<Recording> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rec.index as u64 + 1);
    let fs = cfg.fs;
    let n = (rec.duration_s * fs).round() as usize;
    let electrodes = Electrode::STANDARD_19;
    let pos: Vec<(f64, f64)> = electrodes.iter().map(|&e| electrode_position(e)).collect();
    let mut planner = FftPlanner::new();
    let bg = cfg.background_uv;

    // fraction of background variance shared through the latent sources
    let mut shared_frac = 0.6;
    for (d, spec) in cfg.disorders.iter().enumerate() {
        if let Signature::ConnectivityDrop { damping } = spec.signature {
            shared_frac *= 1.0 - damping * rec.severity[d].min(1.0);
        }
    }
    let sources: Vec<(Vec<f64>, (f64, f64))> = (0..SHARED_SOURCES)
        .map(|_| {
            let c = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (pink_noise(n, fs, &mut rng, &mut planner), c)
        })
        .collect();

    let mut theta_gain = 1.0;
    let mut alpha_gain = 1.0;
    for (d, spec) in cfg.disorders.iter().enumerate() {
        if let Signature::ThetaAlphaShift { ratio } = spec.signature {
            let r = ratio.powf(rec.severity[d]);
            theta_gain *= r;
            alpha_gain /= r;
        }
    }
    let alpha_hz = rng.random_range(8.5..11.5);
    let theta_hz = rng.random_range(4.5..7.0);
    let beta_hz = rng.random_range(15.0..25.0);
    let alpha_phase = rng.random_range(0.0..2.0 * PI);
    let theta_phase = rng.random_range(0.0..2.0 * PI);

    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(electrodes.len());
    for &p in &pos {
        let own = pink_noise(n, fs, &mut rng, &mut planner);
        let mix: Vec<f64> = sources.iter().map(|(_, c)| gaussian_weight(p, *c, 0.6)).collect();
        let mix_norm = mix.iter().map(|m| m * m).sum::<f64>().sqrt().max(1e-12);
        let a_own = bg * (1.0 - shared_frac).sqrt();
        let a_shared = bg * shared_frac.sqrt() / mix_norm;
        let mut x: Vec<f64> = own.iter().map(|v| a_own * v).collect();
        for ((src, _), m) in sources.iter().zip(&mix) {
            for (xi, s) in x.iter_mut().zip(src) {
                *xi += a_shared * m * s;
            }
        }
        // posterior alpha, central theta, frontal beta; small per-electrode
        // phase lags keep neighbouring differences alive
        let alpha_amp = bg * 0.8 * alpha_gain * (0.25 + 0.75 * (-p.1).max(0.0));
        let theta_amp = bg * 0.35 * theta_gain * (0.4 + 0.6 * gaussian_weight(p, (0.0, 0.0), 0.6));
        let beta_amp = bg * 0.2 * (0.3 + 0.7 * p.1.max(0.0));
        let lag = rng.random_range(-0.3..0.3);
        let env = rng.random_range(0.0..2.0 * PI);
        for (xi, r) in x.iter_mut().zip(rhythm(n, fs, alpha_hz, alpha_phase + lag, env, 0.1)) {
            *xi += alpha_amp * r;
        }
        for (xi, r) in x.iter_mut().zip(rhythm(n, fs, theta_hz, theta_phase + lag, env + 1.0, 0.07)) {
            *xi += theta_amp * r;
        }
        let beta_phase = rng.random_range(0.0..2.0 * PI);
        for (xi, r) in x.iter_mut().zip(rhythm(n, fs, beta_hz, beta_phase, env + 2.0, 0.13)) {
            *xi += beta_amp * r;
        }
        channels.push(x);
    }

    for (d, spec) in cfg.disorders.iter().enumerate() {
        let sev = rec.severity[d];
        if sev <= 0.0 {
            continue;
        }
        match spec.signature {
            Signature::GammaBurst { rate_hz, gain } => {
                let focus = if rng.random_bool(0.5) { (-0.9, 0.1) } else { (0.9, 0.1) };
                let weights: Vec<f64> = pos.iter().map(|&p| gaussian_weight(p, focus, 0.45)).collect();
                let burst_len = (0.5 * fs) as usize;
                let n_bursts = (rate_hz * rec.duration_s).round() as usize;
                for _ in 0..n_bursts {
                    if n <= burst_len {
                        break;
                    }
                    let start = rng.random_range(0..n - burst_len);
                    let f = rng.random_range(32.0..42.0);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    let amp = bg * gain * sev;
                    for t in 0..burst_len {
                        let taper = (PI * t as f64 / burst_len as f64).sin().powi(2);
                        let v = amp * taper * (2.0 * PI * f * t as f64 / fs + phase).sin();
                        for (ch, w) in channels.iter_mut().zip(&weights) {
                            ch[start + t] += w * v;
                        }
                    }
                }
            }
            Signature::DiffuseSlowing { gain } => {
                let normal = Normal::new(1.0, 0.35).expect("valid");
                for ch in channels.iter_mut() {
                    let w: f64 = normal.sample(&mut rng);
                    let w = w.max(0.2);
                    for _ in 0..2 {
                        let f = rng.random_range(1.0..3.5);
                        let phase = rng.random_range(0.0..2.0 * PI);
                        let env = rng.random_range(0.0..2.0 * PI);
                        for (xi, r) in ch.iter_mut().zip(rhythm(n, fs, f, phase, env, 0.05)) {
                            *xi += bg * gain * sev * w * r / 2f64.sqrt();
                        }
                    }
                }
            }
            Signature::ThetaAlphaShift { .. } | Signature::ConnectivityDrop { .. } => {}
        }
    }

    let channels = electrodes
        .iter()
        .zip(channels)
        .map(|(&electrode, samples)| Channel {
            electrode,
            samples: samples.into_iter().map(|v| v.clamp(-500.0, 500.0)).collect(),
        })
        .collect();
    Recording::new(&rec.patient_id, &rec.session_id, fs, channels)
}

pub fn write_labels_csv<W: Write>(plan: &CorpusPlan, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["recording_id".to_string(), "patient_id".to_string()];
    header.extend(plan.disorders.iter().cloned());
    wtr.write_record(&header)?;
    for r in &plan.recordings {
        let mut row = vec![r.recording_id(), r.patient_id.clone()];
        row.extend(r.labels.iter().map(|&l| (l as u8).to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_patients_csv<W: Write>(plan: &CorpusPlan, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(["patient_id", "n_recordings"])?;
    let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
    for r in &plan.recordings {
        *counts.entry(r.patient_id.as_str()).or_default() += 1;
    }
    for (p, c) in counts {
        wtr.write_record([p.to_string(), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `<patient>_<session>.edf` files, `labels.csv` and `patients.csv`.
pub fn generate_corpus(cfg: &SynthConfig, out_dir: &Path) -> Result<CorpusPlan> {
    let plan = plan_corpus(cfg)?;
    fs::create_dir_all(out_dir)?;
    let opts = EdfWriteOptions::default();
    plan.recordings.par_iter().try_for_each(|r| -> Result<()> {
        let rec = generate_recording(cfg, r)?;
        let path = out_dir.join(format!("{}.edf", r.recording_id()));
        fs::write(&path, write_edf(&rec, &opts)?).map_err(|e| Error::from(e).in_file(&path))
    })?;
    write_labels_csv(&plan, fs::File::create(out_dir.join("labels.csv"))?)?;
    write_patients_csv(&plan, fs::File::create(out_dir.join("patients.csv"))?)?;
    Ok(plan)
}
