use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, Tree, TreeParams};
use crate::geometry::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k.clamp(1, d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
        }
    }
}

/// Bagged classification trees; the class-1 probability is the fraction of
/// trees voting for class 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// A tree votes for class 1 when its leaf holds a strict majority of
    /// class-1 samples.
    pub fn vote(tree: &Tree, row: &[f64]) -> u8 {
        u8::from(tree.predict(row) > 0.5)
    }

    pub fn prob_one(&self, row: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        let ones: usize = self
            .trees
            .iter()
            .map(|t| usize::from(Self::vote(t, row)))
            .sum();
        ones as f64 / self.trees.len() as f64
    }
}

pub(crate) fn fit(x: &Matrix, y: &[u8], p: &ForestParams, seed: u64) -> Forest {
    let n = x.rows();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let params = TreeParams {
        max_depth: p.max_depth,
        min_samples_split: 2,
        min_samples_leaf: p.min_samples_leaf.max(1),
        max_features: Some(p.max_features.resolve(x.cols())),
    };
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let samples: Vec<usize> = if p.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree::fit(x, &targets, samples, params, &mut rng, |s| {
                s.iter().map(|&i| targets[i]).sum::<f64>() / s.len() as f64
            })
        })
        .collect();
    Forest { trees }
}
