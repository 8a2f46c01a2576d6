//! Run configuration: a TOML file, then command-line overrides on top.
//!
//! ```toml
//! seed = 7
//! features = "displacement"
//! balance = true
//! folds = 5
//!
//! [data]
//! tweets = "train.ndjson"
//! embeddings = "train.csv"      # omit to use the hashing embedder
//!
//! [flow]
//! num_cycles = 30
//! step_size = 0.05
//! loss = { kind = "topo_entropy", dims = [0] }
//!
//! [model]
//! kind = "random_forest"
//! n_trees = 100
//! ```

use std::path::{Path, PathBuf};

use persgrad::flow::{FlowConfig, LossKind};
use persgrad::pipeline::{FeatureMode, PipelineConfig};
use persgrad::synth::{BlobGenerator, RatioShape};
use persgrad::timeseries::WindowSpec;
use persgrad::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const SEED_ENV: &str = "PERSGRAD_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Raw,
    #[default]
    Displacement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// NDJSON tweet records.
    pub tweets: Option<PathBuf>,
    /// CSV embeddings keyed by tweet id; hashing embedder when absent.
    pub embeddings: Option<PathBuf>,
    /// Expected embedding dimension; taken from the file header when absent.
    pub embedding_dim: Option<usize>,
    pub hash_dim: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            tweets: None,
            embeddings: None,
            embedding_dim: None,
            hash_dim: 512,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeseriesConfig {
    /// Pad every bucket to this many records from the background pool.
    pub pad_to: Option<usize>,
    /// Background pool records and embeddings (label 0).
    pub background: Option<DataConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub generator: BlobGenerator,
    /// Training and eval sets; keep `n_event + n_background` equal to
    /// `per_window` so models see clouds of the size they will classify.
    pub n_event: usize,
    pub n_background: usize,
    /// Offset added to every coordinate of both means for the eval set.
    pub eval_shift: f64,
    pub shape: RatioShape,
    pub windows: usize,
    pub per_window: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            generator: BlobGenerator::default(),
            n_event: 100,
            n_background: 100,
            eval_shift: 2.0,
            shape: RatioShape::Ramp {
                start: 0.05,
                end: 0.95,
            },
            windows: 20,
            per_window: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    /// Classifier short names: lr, rf, gb, ff.
    pub kinds: Vec<String>,
    pub repeats: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 500],
            kinds: vec!["lr".into(), "rf".into()],
            repeats: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub features: FeatureKind,
    pub balance: bool,
    pub folds: usize,
    pub data: DataConfig,
    pub flow: FlowConfig,
    pub model: ModelSpec,
    pub window: WindowSpec,
    pub timeseries: TimeseriesConfig,
    pub synth: SynthConfig,
    pub benchmark: BenchmarkConfig,
    /// Highest homology dimension for `diagram-dump`.
    pub diagram_max_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            features: FeatureKind::default(),
            balance: true,
            folds: 5,
            data: DataConfig::default(),
            flow: FlowConfig::default(),
            model: ModelSpec::default(),
            window: WindowSpec::default(),
            timeseries: TimeseriesConfig::default(),
            synth: SynthConfig::default(),
            benchmark: BenchmarkConfig::default(),
            diagram_max_dim: 1,
        }
    }
}

/// Flags shared by every command. Each one overrides the config file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// TOML run configuration
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Top-level seed; falls back to the config, then to PERSGRAD_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// NDJSON tweet records
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// CSV embeddings keyed by tweet id
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dimension of the hashing embedder
    #[arg(long)]
    pub hash_dim: Option<usize>,
    /// Classifier: lr, rf, gb or ff
    #[arg(long)]
    pub model_kind: Option<String>,
    /// Flow loss: topo or vanilla
    #[arg(long)]
    pub loss: Option<String>,
    /// Use raw embeddings instead of flow displacements
    #[arg(long)]
    pub raw_features: bool,
    /// Flow cycles
    #[arg(long)]
    pub cycles: Option<usize>,
    /// Flow step size
    #[arg(long)]
    pub step: Option<f64>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Train on the full, unbalanced data
    #[arg(long)]
    pub no_balance: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::config(format!("{}: {e}", origin.display())))
    }

    /// Reads the config file (if any) and applies the flags.
    pub fn resolve(o: &Overrides) -> Result<Self, Failure> {
        let mut cfg = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
                Self::from_toml(&text, path)?
            }
            None => Self::default(),
        };
        if o.seed.is_some() {
            cfg.seed = o.seed;
        }
        if cfg.seed.is_none() {
            cfg.seed = Some(seed_from_env()?);
        }
        if o.input.is_some() {
            cfg.data.tweets = o.input.clone();
        }
        if o.embeddings.is_some() {
            cfg.data.embeddings = o.embeddings.clone();
        }
        if let Some(d) = o.hash_dim {
            cfg.data.hash_dim = d;
        }
        if let Some(kind) = &o.model_kind {
            if kind != cfg.model.short_name() {
                cfg.model = ModelSpec::from_short_name(kind)?;
            }
        }
        if let Some(loss) = &o.loss {
            cfg.flow.loss = match loss.as_str() {
                "topo" => match &cfg.flow.loss {
                    keep @ LossKind::TopoEntropy { .. } => keep.clone(),
                    LossKind::VanillaBarycenter => LossKind::default(),
                },
                "vanilla" => LossKind::VanillaBarycenter,
                other => return Err(Failure::config(format!("unknown loss '{other}' (expected topo or vanilla)"))),
            };
        }
        if o.raw_features {
            cfg.features = FeatureKind::Raw;
        }
        if let Some(c) = o.cycles {
            cfg.flow.num_cycles = c;
        }
        if let Some(s) = o.step {
            cfg.flow.step_size = s;
        }
        if let Some(k) = o.folds {
            cfg.folds = k;
        }
        if o.no_balance {
            cfg.balance = false;
        }
        cfg.flow.validate()?;
        cfg.window.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn feature_mode(&self) -> FeatureMode {
        match self.features {
            FeatureKind::Raw => FeatureMode::Raw,
            FeatureKind::Displacement => FeatureMode::Displacement(self.flow.clone()),
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            features: self.feature_mode(),
            model: self.model.clone(),
            balance: self.balance,
        }
    }
}

fn seed_from_env() -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}
