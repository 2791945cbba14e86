//! Longitudinal bipolar ("double-banana") montage.
//!
//! Channel numbering follows the chain order LL, LP, RP, RL, front to back
//! within each chain, so Ch1 is Fp1–F7 and Ch16 is T6–O2.

use serde::Serialize;

use crate::edf::{Electrode, Recording};
use crate::error::{Error, Result};

pub const N_BIPOLAR: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chain {
    /// Left lateral.
    LL,
    /// Left parasagittal.
    LP,
    /// Right parasagittal.
    RP,
    /// Right lateral.
    RL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MontagePair {
    /// 1-based channel index (Ch1..Ch16).
    pub index: usize,
    pub chain: Chain,
    pub anode: Electrode,
    pub cathode: Electrode,
}

impl MontagePair {
    pub fn name(&self) -> String {
        format!("Ch{}", self.index)
    }

    pub fn derivation(&self) -> String {
        format!("{}-{}", self.anode, self.cathode)
    }
}

const fn pair(index: usize, chain: Chain, anode: Electrode, cathode: Electrode) -> MontagePair {
    MontagePair {
        index,
        chain,
        anode,
        cathode,
    }
}

pub const DOUBLE_BANANA: [MontagePair; N_BIPOLAR] = {
    use Chain::*;
    use Electrode::*;
    [
        pair(1, LL, Fp1, F7),
        pair(2, LL, F7, T3),
        pair(3, LL, T3, T5),
        pair(4, LL, T5, O1),
        pair(5, LP, Fp1, F3),
        pair(6, LP, F3, C3),
        pair(7, LP, C3, P3),
        pair(8, LP, P3, O1),
        pair(9, RP, Fp2, F4),
        pair(10, RP, F4, C4),
        pair(11, RP, C4, P4),
        pair(12, RP, P4, O2),
        pair(13, RL, Fp2, F8),
        pair(14, RL, F8, T4),
        pair(15, RL, T4, T6),
        pair(16, RL, T6, O2),
    ]
};

/// Distinct electrodes the pair list references, in first-use order.
pub fn montage_electrodes() -> Vec<Electrode> {
    let mut out = Vec::new();
    for p in &DOUBLE_BANANA {
        for e in [p.anode, p.cathode] {
            if !out.contains(&e) {
                out.push(e);
            }
        }
    }
    out
}

/// The pair list as a JSON document for report tooling.
pub fn montage_json() -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        montage: &'static str,
        pairs: &'a [MontagePair],
    }
    serde_json::to_string_pretty(&Doc {
        montage: "longitudinal-bipolar-double-banana",
        pairs: &DOUBLE_BANANA,
    })
    .expect("static montage serializes")
}

/// Sparse 16 x C differencing matrix: row k has +1 at the anode column and
/// -1 at the cathode column of pair k.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencingMatrix {
    n_cols: usize,
    rows: [(usize, usize); N_BIPOLAR],
}

impl DifferencingMatrix {
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// (anode column, cathode column) of each row.
    pub fn rows(&self) -> &[(usize, usize); N_BIPOLAR] {
        &self.rows
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|&(a, c)| {
                let mut row = vec![0.0; self.n_cols];
                row[a] = 1.0;
                row[c] = -1.0;
                row
            })
            .collect()
    }

    /// B = D x for a single time point.
    pub fn apply_vector(&self, x: &[f64]) -> [f64; N_BIPOLAR] {
        let mut out = [0.0; N_BIPOLAR];
        for (o, &(a, c)) in out.iter_mut().zip(&self.rows) {
            *o = x[a] - x[c];
        }
        out
    }
}

pub fn build_differencing_matrix(electrode_order: &[Electrode]) -> Result<DifferencingMatrix> {
    let col = |e: Electrode| electrode_order.iter().position(|&x| x == e);
    let missing: Vec<Electrode> = montage_electrodes()
        .into_iter()
        .filter(|&e| col(e).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingChannels(missing));
    }
    let mut rows = [(0, 0); N_BIPOLAR];
    for (row, p) in rows.iter_mut().zip(&DOUBLE_BANANA) {
        *row = (col(p.anode).unwrap(), col(p.cathode).unwrap());
    }
    Ok(DifferencingMatrix {
        n_cols: electrode_order.len(),
        rows,
    })
}

/// Sixteen bipolar derivations, Ch1..Ch16, in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct BipolarRecording {
    pub patient_id: String,
    pub session_id: String,
    pub fs: f64,
    pub channels: Vec<Vec<f64>>,
}

impl BipolarRecording {
    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }
}

pub fn apply_montage(recording: &Recording) -> Result<BipolarRecording> {
    let order: Vec<Electrode> = recording.electrodes().collect();
    let d = build_differencing_matrix(&order)?;
    let chans = recording.channels();
    let channels = d
        .rows()
        .iter()
        .map(|&(a, c)| {
            chans[a]
                .samples
                .iter()
                .zip(&chans[c].samples)
                .map(|(x, y)| x - y)
                .collect()
        })
        .collect();
    Ok(BipolarRecording {
        patient_id: recording.patient_id().to_string(),
        session_id: recording.session_id().to_string(),
        fs: recording.fs(),
        channels,
    })
}
