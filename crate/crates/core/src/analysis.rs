//! Two-component PCA, ranked importance tables and ROC/PR curve points.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::aggregation::FeatureManifest;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Unit loading vectors, one per component.
    pub components: [Vec<f64>; 2],
    /// Fraction of total variance carried by each component.
    pub explained: [f64; 2],
    pub coords: Vec<[f64; 2]>,
    /// Set when the data has rank one: the second component then spans no
    /// variance and is an arbitrary unit vector orthogonal to the first.
    pub rank_deficient: bool,
}

/// Relative eigenvalue floor below which a component counts as empty.
const RANK_TOL: f64 = 1e-12;

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
    n
}

/// Unit vector orthogonal to `v1`: the coordinate axis least aligned with it,
/// with the `v1` part projected out.
fn orthogonal_to(v1: &[f64]) -> Vec<f64> {
    let mut axis = 0;
    for (i, x) in v1.iter().enumerate() {
        if x.abs() < v1[axis].abs() {
            axis = i;
        }
    }
    let mut v: Vec<f64> = v1.iter().map(|&a| -a * v1[axis]).collect();
    v[axis] += 1.0;
    normalize(&mut v);
    v
}

/// Top two principal axes of the column-centred data. Each component is
/// oriented so its largest-magnitude loading is positive.
pub fn pca2(x: &Matrix) -> Result<PcaProjection> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if n < 3 || p < 2 {
        return Err(Error::InvalidConfig(format!(
            "PCA needs at least 3 rows and 2 columns, got {n}x{p}"
        )));
    }
    let mut c = DMatrix::from_row_slice(n, p, x.data());
    for j in 0..p {
        let m = c.column(j).mean();
        c.column_mut(j).add_scalar_mut(-m);
    }
    // Eigenvectors come from whichever of X'X and XX' is smaller; both share
    // their non-zero spectrum.
    let gram = n < p;
    let s = if gram { &c * c.transpose() } else { c.transpose() * &c };
    let eig = SymmetricEigen::new(s);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateRank);
    }
    let lambda = [eig.eigenvalues[idx[0]].max(0.0), eig.eigenvalues[idx[1]].max(0.0)];
    let rank_deficient = lambda[1] <= RANK_TOL * lambda[0];

    let loading = |k: usize| -> Vec<f64> {
        let e = eig.eigenvectors.column(idx[k]);
        let mut v: Vec<f64> = if gram {
            (0..p).map(|j| c.column(j).dot(&e)).collect()
        } else {
            e.iter().copied().collect()
        };
        normalize(&mut v);
        v
    };
    let mut v1 = loading(0);
    orient(&mut v1);
    let mut v2 = if rank_deficient { orthogonal_to(&v1) } else { loading(1) };
    orient(&mut v2);

    let coords = (0..n)
        .map(|i| {
            let r = c.row(i);
            let dot = |v: &[f64]| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            [dot(&v1), dot(&v2)]
        })
        .collect();
    Ok(PcaProjection {
        components: [v1, v2],
        explained: [lambda[0] / total, if rank_deficient { 0.0 } else { lambda[1] / total }],
        coords,
        rank_deficient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub rank: usize,
    pub feature: String,
    pub score: f64,
}

/// Features with positive score, descending, ties in manifest order.
pub fn importance_table(
    importance: &[f64],
    manifest: &FeatureManifest,
    top_n: usize,
) -> Result<Vec<ImportanceRow>> {
    if importance.len() != manifest.len() {
        return Err(Error::LengthMismatch {
            left: importance.len(),
            right: manifest.len(),
        });
    }
    let mut idx: Vec<usize> = (0..importance.len()).filter(|&i| importance[i] > 0.0).collect();
    idx.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    Ok(idx
        .into_iter()
        .take(top_n)
        .enumerate()
        .map(|(r, i)| ImportanceRow {
            rank: r + 1,
            feature: manifest.features[i].name.clone(),
            score: importance[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    /// (false positive rate, true positive rate) from (0,0) to (1,1).
    pub roc: Vec<(f64, f64)>,
    /// (recall, precision) after each distinct threshold, descending.
    pub pr: Vec<(f64, f64)>,
}

/// Trapezoidal area under a polyline.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

pub fn curve_points(scores: &[f64], labels: &[bool]) -> Result<Curves> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    if n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut roc = vec![(0.0, 0.0)];
    let mut pr = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        roc.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        pr.push((tp as f64 / n_pos as f64, tp as f64 / (tp + fp) as f64));
    }
    Ok(Curves { roc, pr })
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Columns: recording_id, x, y, label.
pub fn write_pca_csv<W: Write>(
    pca: &PcaProjection,
    ids: &[String],
    labels: &[bool],
    w: W,
) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["recording_id", "x", "y", "label"])?;
    for ((c, id), &l) in pca.coords.iter().zip(ids).zip(labels) {
        wtr.write_record([
            id.clone(),
            c[0].to_string(),
            c[1].to_string(),
            (l as u8).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_points_csv<W: Write>(header: [&str; 2], points: &[(f64, f64)], w: W) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(header)?;
    for (a, b) in points {
        wtr.write_record([a.to_string(), b.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_importance_csv<W: Write>(rows: &[ImportanceRow], w: W) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["rank", "feature", "score"])?;
    for r in rows {
        wtr.write_record([r.rank.to_string(), r.feature.clone(), r.score.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
