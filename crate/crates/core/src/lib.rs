//! Persistence-gradient feature extraction for event detection in streams of
//! embedded short texts.
//!
//! The pipeline embeds (or ingests) a point cloud, evolves it under a
//! differentiable loss for a fixed number of descent cycles, and hands the
//! per-point displacement to a binary classifier. Two losses are provided:
//! the persistence entropy of the Vietoris-Rips diagram and the squared
//! distance to the barycenter.
//!
//! Modules, bottom-up:
//!
//! * [`geometry`]: point clouds, Euclidean distance matrices, labeled datasets.
//! * [`persistence`]: Vietoris-Rips persistence in dimensions 0..=2 with the
//!   critical-edge bookkeeping the gradient needs, and persistence entropy.
//! * [`flow`]: losses with analytic gradients and the fixed-cycle evolution.
//! * [`classifiers`]: logistic regression, random forest, gradient boosting,
//!   a small feed-forward network, metrics and cross-validation.
//! * [`ingest`]: text cleaning, NDJSON tweet records, CSV embeddings and a
//!   hashing embedder.
//! * [`timeseries`]: time bucketing, background padding, per-window detection
//!   and ratio series.
//! * [`synth`]: Gaussian blob generators and synthetic ratio scenarios.

pub mod classifiers;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod ingest;
pub mod persistence;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
pub use geometry::{barycenter, pairwise_distances, DistanceMatrix, LabeledDataset, Matrix, PointCloud};
pub use persistence::{
    persistence_entropy, vr_persistence, vr_persistence_h0, PersistenceDiagram, PersistencePair,
    Simplex,
};
pub use classifiers::{
    balance_classes, classification_report, cross_validate, prediction_correlation, train,
    EvalReport, ModelSpec, TrainedModel,
};
pub use flow::{evolve, FlowConfig, FlowResult, LossKind};
pub use pipeline::{FeatureMode, FittedPipeline, PipelineConfig};
pub use synth::{BlobGenerator, RatioShape};
pub use timeseries::{RatioSeries, WindowSpec};
