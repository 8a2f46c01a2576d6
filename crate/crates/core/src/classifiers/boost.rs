use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, Tree, TreeParams};
use crate::geometry::Matrix;
use crate::stats::sigmoid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

/// Additive log-odds model: `F(x) = base + lr * sum_t tree_t(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub stages: Vec<Tree>,
}

impl BoostModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.stages.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn prob_one(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }
}

/// Stagewise log-loss boosting: each depth-limited tree is fit to the
/// residuals `y - p` and its leaves take one Newton step
/// `sum(r) / sum(p (1 - p))`.
pub(crate) fn fit(x: &Matrix, y: &[u8], p: &BoostParams, seed: u64) -> BoostModel {
    let n = x.rows();
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let prior = (pos / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let base_score = (prior / (1.0 - prior)).ln();

    let mut scores = vec![base_score; n];
    let mut stages = Vec::with_capacity(p.n_stages);
    let params = TreeParams {
        max_depth: Some(p.max_depth),
        min_samples_split: 2,
        min_samples_leaf: p.min_samples_leaf.max(1),
        max_features: None,
    };
    // all features are examined, so the rng is never consumed
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..p.n_stages {
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let residuals: Vec<f64> = probs
            .iter()
            .zip(y)
            .map(|(q, &t)| f64::from(t) - q)
            .collect();
        let t = tree::fit(x, &residuals, (0..n).collect(), params, &mut rng, |s| {
            let num: f64 = s.iter().map(|&i| residuals[i]).sum();
            let den: f64 = s.iter().map(|&i| probs[i] * (1.0 - probs[i])).sum();
            if den.abs() < 1e-150 {
                0.0
            } else {
                num / den
            }
        });
        for (i, sc) in scores.iter_mut().enumerate() {
            *sc += p.learning_rate * t.predict(x.row(i));
        }
        stages.push(t);
    }
    BoostModel {
        base_score,
        learning_rate: p.learning_rate,
        stages,
    }
}
