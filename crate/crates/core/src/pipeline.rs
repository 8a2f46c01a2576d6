//! Feature extraction and the fit/predict pipeline built on it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{balance_indices, train, ModelSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::flow::{evolve, FlowConfig};
use crate::geometry::{LabeledDataset, Matrix, PointCloud};
use crate::stats::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMode {
    /// Embedding coordinates as they are.
    Raw,
    /// Displacement `X' = evolved - original` after a gradient flow.
    Displacement(FlowConfig),
}

impl Default for FeatureMode {
    fn default() -> Self {
        FeatureMode::Displacement(FlowConfig::default())
    }
}

/// Features for every point of `cloud`. Flow features depend on the whole
/// cloud: a point's displacement is shaped by its neighbours.
pub fn extract_features(cloud: &PointCloud, mode: &FeatureMode) -> Result<Matrix> {
    match mode {
        FeatureMode::Raw => Ok(cloud.points().clone()),
        FeatureMode::Displacement(cfg) => Ok(evolve(cloud, cfg)?.displacement),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub features: FeatureMode,
    pub model: ModelSpec,
    /// Downsample the majority class of training sets.
    pub balance: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureMode::default(),
            model: ModelSpec::default(),
            balance: true,
        }
    }
}

/// A trained classifier together with the feature extraction it expects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub features: FeatureMode,
    pub model: TrainedModel,
}

impl FittedPipeline {
    /// Balances (if configured), evolves the training cloud as one batch and
    /// trains on the resulting features.
    pub fn fit(dataset: &LabeledDataset, cfg: &PipelineConfig, seed: u64) -> Result<Self> {
        let train_set = if cfg.balance {
            dataset.subset(&balance_indices(&dataset.labels, derive_seed(seed, 10))?)?
        } else {
            dataset.clone()
        };
        let features = extract_features(&train_set.cloud, &cfg.features)?;
        let model = train(&features, &train_set.labels, &cfg.model, derive_seed(seed, 11))?;
        Ok(Self {
            features: cfg.features.clone(),
            model,
        })
    }

    /// Class-1 probabilities for a batch evolved as one cloud.
    pub fn predict_proba(&self, cloud: &PointCloud) -> Result<Vec<f64>> {
        let x = extract_features(cloud, &self.features)?;
        Ok(self.model.predict_proba(&x)?.into_iter().map(|p| p[1]).collect())
    }

    pub fn predict(&self, cloud: &PointCloud) -> Result<Vec<u8>> {
        let x = extract_features(cloud, &self.features)?;
        self.model.predict(&x)
    }

    /// Versioned JSON: `{"format": "persgrad-pipeline", "version": 1,
    /// "features": {"kind": ..}, "model": {"feature_dim": .., "seed": ..,
    /// "model": {"kind": .., ..}}}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PipelineFile {
            format: PIPELINE_FORMAT.to_owned(),
            version: PIPELINE_FORMAT_VERSION,
            pipeline: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PipelineFile = serde_json::from_str(s)?;
        if file.format != PIPELINE_FORMAT || file.version != PIPELINE_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "expected {PIPELINE_FORMAT} version {PIPELINE_FORMAT_VERSION}, found {} version {}",
                file.format, file.version
            )));
        }
        Ok(file.pipeline)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

const PIPELINE_FORMAT: &str = "persgrad-pipeline";
const PIPELINE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PipelineFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    pipeline: FittedPipeline,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LogisticParams;
    use crate::synth::{blob_dataset, BlobGenerator};

    #[test]
    fn raw_pipeline_round_trip() {
        let ds = blob_dataset(&BlobGenerator::new(3, 6.0, 0.2, 1.0), 20, 30, 1).unwrap();
        let cfg = PipelineConfig {
            features: FeatureMode::Raw,
            model: ModelSpec::LogisticRegression(LogisticParams::default()),
            balance: true,
        };
        let p = FittedPipeline::fit(&ds, &cfg, 5).unwrap();
        let back = FittedPipeline::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.predict(&ds.cloud).unwrap(), ds.labels);
        let tampered = p.to_json().unwrap().replace("\"version\": 1", "\"version\": 2");
        assert!(FittedPipeline::from_json(&tampered).is_err());
    }

    #[test]
    fn flow_pipeline_separates_blobs() {
        let gen = BlobGenerator::default();
        let p = FittedPipeline::fit(&blob_dataset(&gen, 60, 60, 2).unwrap(), &PipelineConfig::default(), 2).unwrap();
        let test = blob_dataset(&gen, 60, 60, 3).unwrap();
        let pred = p.predict(&test.cloud).unwrap();
        let correct = pred.iter().zip(&test.labels).filter(|(a, b)| a == b).count();
        assert!(correct >= 108, "{correct}/120");
    }
}
