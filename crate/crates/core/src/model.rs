//! Classifier selection, class weighting and a common interface over the
//! boosted-tree and MLP models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::{self, Ensemble, GbdtConfig};
use crate::linalg::Matrix;
use crate::mlp::{self, MlpConfig, MlpModel, TrainingLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbdt,
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gbdt => "gbdt",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gbdt" | "xgboost" => Ok(ModelKind::Gbdt),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidConfig(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Disorders with diffuse signatures default to the MLP; everything else to
/// boosted trees.
pub fn default_model_kind(disorder: &str) -> ModelKind {
    let d = disorder.to_ascii_lowercase();
    const MLP_DISORDERS: [&str; 4] = ["peripheral", "developmental", "behavioral", "movement"];
    if MLP_DISORDERS.iter().any(|k| d.contains(k)) {
        ModelKind::Mlp
    } else {
        ModelKind::Gbdt
    }
}

/// Per-row weights: positives get `N_neg / N_pos`, negatives 1.
pub fn class_weights(y: &[bool]) -> Result<Vec<f64>> {
    let n_pos = y.iter().filter(|&&v| v).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let wp = n_neg as f64 / n_pos as f64;
    Ok(y.iter().map(|&v| if v { wp } else { 1.0 }).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub gbdt: GbdtConfig,
    #[serde(default)]
    pub mlp: MlpConfig,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        Self {
            kind,
            gbdt: GbdtConfig {
                seed,
                ..GbdtConfig::default()
            },
            mlp: MlpConfig {
                seed,
                ..MlpConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Gbdt(Ensemble),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Gbdt(_) => ModelKind::Gbdt,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Gbdt(e) => gbdt::predict(e, x),
            TrainedModel::Mlp(m) => mlp::predict(m, x),
        }
    }

    pub fn importance(&self) -> Vec<f64> {
        match self {
            TrainedModel::Gbdt(e) => gbdt::importance(e),
            TrainedModel::Mlp(m) => mlp::importance(m),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        // re-run the format checks of the concrete model types
        match &m {
            TrainedModel::Gbdt(e) => {
                Ensemble::from_json(&serde_json::to_string(e)?)?;
            }
            TrainedModel::Mlp(n) => {
                MlpModel::from_json(&serde_json::to_string(n)?)?;
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub model: TrainedModel,
    pub mlp_log: Option<TrainingLog>,
}

/// Trains with class weights. The MLP needs `val` for early stopping; the
/// boosted trees ignore it.
pub fn fit(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[bool],
    val: Option<(&Matrix, &[bool])>,
) -> Result<FitOutput> {
    let w = class_weights(y)?;
    match spec.kind {
        ModelKind::Gbdt => Ok(FitOutput {
            model: TrainedModel::Gbdt(gbdt::train(x, y, &w, &spec.gbdt)?),
            mlp_log: None,
        }),
        ModelKind::Mlp => {
            let (xv, yv) = val.ok_or(Error::EmptyInput("MLP training needs a validation set"))?;
            let (m, log) = mlp::train(x, y, &w, xv, yv, &spec.mlp)?;
            Ok(FitOutput {
                model: TrainedModel::Mlp(m),
                mlp_log: Some(log),
            })
        }
    }
}
