use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::geometry::Matrix;
use crate::stats::sigmoid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Fit on z-scored features (the scaler is stored with the model).
    pub standardize: bool,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            iterations: 500,
            learning_rate: 0.1,
            standardize: true,
        }
    }
}

/// `P(y = 1 | x) = sigmoid(beta . scale(x) + intercept)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub scaler: Option<Standardizer>,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let z: f64 = match &self.scaler {
            Some(s) => self
                .beta
                .iter()
                .zip(row)
                .enumerate()
                .map(|(k, (b, x))| b * s.apply(k, *x))
                .sum(),
            None => self.beta.iter().zip(row).map(|(b, x)| b * x).sum(),
        };
        z + self.intercept
    }

    pub fn prob_one(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

/// Full-batch gradient descent on mean log-loss plus `l2/2 |beta|^2`; the
/// intercept is not penalized.
pub(crate) fn fit(x: &Matrix, y: &[u8], p: &LogisticParams) -> LogisticModel {
    let (n, d) = (x.rows(), x.cols());
    let scaler = p.standardize.then(|| Standardizer::fit(x));
    let scaled = match &scaler {
        Some(s) => s.transform(x),
        None => x.clone(),
    };
    let mut beta = vec![0.0; d];
    let mut intercept = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..p.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut g0 = 0.0;
        for (i, row) in scaled.iter_rows().enumerate() {
            let z: f64 = beta.iter().zip(row).map(|(b, v)| b * v).sum::<f64>() + intercept;
            let r = sigmoid(z) - f64::from(y[i]);
            g0 += r;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += r * v;
            }
        }
        let inv = 1.0 / n as f64;
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= p.learning_rate * (g * inv + p.l2 * *b);
        }
        intercept -= p.learning_rate * g0 * inv;
    }
    LogisticModel {
        beta,
        intercept,
        scaler,
    }
}
