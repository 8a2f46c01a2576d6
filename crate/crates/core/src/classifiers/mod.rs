//! Binary classifiers over displacement (or raw) features, evaluation
//! metrics and cross-validation.
//!
//! Every model is deterministic given its training data, hyperparameters and
//! seed. Models serialize to a versioned JSON document, see
//! [`TrainedModel::to_json`].

mod boost;
mod cv;
mod forest;
mod logistic;
mod metrics;
mod mlp;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Matrix;

pub use boost::{BoostModel, BoostParams};
pub use cv::{balance_classes, balance_indices, cross_validate, stratified_folds, CrossValidation};
pub use forest::{Forest, ForestParams, MaxFeatures};
pub use logistic::{LogisticModel, LogisticParams};
pub use metrics::{accuracy, classification_report, prediction_correlation, ClassMetrics, EvalReport};
pub use mlp::{Dense, FeedForwardParams, Network};

pub const MODEL_FORMAT: &str = "persgrad-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-feature z-scoring; constant features get unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (n, d) = (x.rows() as f64, x.cols());
        let mut mean = vec![0.0; d];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    #[inline]
    pub fn apply(&self, k: usize, v: f64) -> f64 {
        (v - self.mean[k]) / self.scale[k]
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (k, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = self.apply(k, *v);
            }
        }
        out
    }
}

/// Classifier family and its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LogisticRegression(LogisticParams),
    RandomForest(ForestParams),
    GradientBoost(BoostParams),
    FeedForward(FeedForwardParams),
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::RandomForest(ForestParams::default())
    }
}

impl ModelSpec {
    pub fn short_name(&self) -> &'static str {
        match self {
            ModelSpec::LogisticRegression(_) => "lr",
            ModelSpec::RandomForest(_) => "rf",
            ModelSpec::GradientBoost(_) => "gb",
            ModelSpec::FeedForward(_) => "ff",
        }
    }

    /// `lr`, `rf`, `gb` or `ff` with default hyperparameters.
    pub fn from_short_name(name: &str) -> Result<Self> {
        Ok(match name {
            "lr" | "logistic" => ModelSpec::LogisticRegression(LogisticParams::default()),
            "rf" | "forest" => ModelSpec::RandomForest(ForestParams::default()),
            "gb" | "boost" => ModelSpec::GradientBoost(BoostParams::default()),
            "ff" | "mlp" => ModelSpec::FeedForward(FeedForwardParams::default()),
            other => {
                return Err(Error::invalid(format!(
                    "unknown classifier '{other}' (expected lr, rf, gb or ff)"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    LogisticRegression(LogisticModel),
    RandomForest(Forest),
    GradientBoost(BoostModel),
    FeedForward(Network),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_dim: usize,
    pub seed: u64,
    pub model: Model,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

fn check_features(features: &Matrix) -> Result<()> {
    if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite feature at row {}, column {}",
            pos / features.cols().max(1),
            pos % features.cols().max(1)
        )));
    }
    Ok(())
}

/// Fits a classifier of the given kind.
pub fn train(features: &Matrix, labels: &[u8], spec: &ModelSpec, seed: u64) -> Result<TrainedModel> {
    if features.rows() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            features.rows(),
            labels.len()
        )));
    }
    if features.rows() < 2 {
        return Err(Error::Training("need at least two samples".into()));
    }
    if features.cols() == 0 {
        return Err(Error::invalid("features have zero columns"));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::invalid(format!("label {bad} is not 0 or 1")));
    }
    check_features(features)?;
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::Training(format!(
            "training labels contain a single class ({})",
            u8::from(ones > 0)
        )));
    }
    let model = match spec {
        ModelSpec::LogisticRegression(p) => Model::LogisticRegression(logistic::fit(features, labels, p)),
        ModelSpec::RandomForest(p) => Model::RandomForest(forest::fit(features, labels, p, seed)),
        ModelSpec::GradientBoost(p) => Model::GradientBoost(boost::fit(features, labels, p, seed)),
        ModelSpec::FeedForward(p) => Model::FeedForward(mlp::fit(features, labels, p, seed)),
    };
    Ok(TrainedModel {
        feature_dim: features.cols(),
        seed,
        model,
    })
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match &self.model {
            Model::LogisticRegression(_) => "lr",
            Model::RandomForest(_) => "rf",
            Model::GradientBoost(_) => "gb",
            Model::FeedForward(_) => "ff",
        }
    }

    fn prob_one(&self, row: &[f64]) -> [f64; 2] {
        let p1 = match &self.model {
            Model::LogisticRegression(m) => m.prob_one(row),
            Model::RandomForest(m) => m.prob_one(row),
            Model::GradientBoost(m) => m.prob_one(row),
            Model::FeedForward(m) => return m.proba(row),
        };
        [1.0 - p1, p1]
    }

    /// Rows of `(P(class 0), P(class 1))`.
    pub fn predict_proba(&self, features: &Matrix) -> Result<Vec<[f64; 2]>> {
        if features.cols() != self.feature_dim {
            return Err(Error::invalid(format!(
                "model expects {} features, got {}",
                self.feature_dim,
                features.cols()
            )));
        }
        check_features(features)?;
        Ok(features.iter_rows().map(|r| self.prob_one(r)).collect())
    }

    /// Class 1 when its probability exceeds one half.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(features)?
            .into_iter()
            .map(|p| u8::from(p[1] > 0.5))
            .collect())
    }

    /// Versioned JSON: `{"format": "persgrad-model", "version": 1,
    /// "feature_dim": .., "seed": .., "model": {"kind": .., ..}}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::invalid(format!("not a model file (format '{}')", file.format)));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
