//! Feed-forward baseline: input -> ReLU hidden layer -> 2-way softmax.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::geometry::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedForwardParams {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub standardize: bool,
}

impl Default for FeedForwardParams {
    fn default() -> Self {
        Self {
            hidden: 100,
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.05,
            standardize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (w, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub hidden: Dense,
    pub output: Dense,
    pub scaler: Option<Standardizer>,
}

fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let (a, b) = ((z[0] - m).exp(), (z[1] - m).exp());
    [a / (a + b), b / (a + b)]
}

impl Network {
    fn scaled(&self, row: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => row.iter().enumerate().map(|(k, &v)| s.apply(k, v)).collect(),
            None => row.to_vec(),
        }
    }

    fn activations(&self, x: &[f64]) -> (Vec<f64>, [f64; 2]) {
        let mut h = vec![0.0; self.hidden.outputs];
        self.hidden.forward(x, &mut h);
        h.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut z = [0.0; 2];
        self.output.forward(&h, &mut z);
        (h, softmax2(z))
    }

    pub fn proba(&self, row: &[f64]) -> [f64; 2] {
        self.activations(&self.scaled(row)).1
    }
}

fn he_layer(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Dense {
    let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("valid std");
    Dense {
        weights: (0..inputs * outputs).map(|_| normal.sample(rng)).collect(),
        bias: vec![0.0; outputs],
        inputs,
        outputs,
    }
}

/// Mini-batch gradient descent on softmax cross-entropy.
pub(crate) fn fit(x: &Matrix, y: &[u8], p: &FeedForwardParams, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = x.cols();
    let hidden_n = p.hidden.max(1);
    let scaler = p.standardize.then(|| Standardizer::fit(x));
    let data = match &scaler {
        Some(s) => s.transform(x),
        None => x.clone(),
    };
    let mut net = Network {
        hidden: he_layer(&mut rng, d, hidden_n),
        output: he_layer(&mut rng, hidden_n, 2),
        scaler,
    };

    let mut order: Vec<usize> = (0..x.rows()).collect();
    let batch = p.batch_size.max(1);
    let mut gw1 = vec![0.0; net.hidden.weights.len()];
    let mut gb1 = vec![0.0; hidden_n];
    let mut gw2 = vec![0.0; net.output.weights.len()];
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            gw1.iter_mut().for_each(|g| *g = 0.0);
            gb1.iter_mut().for_each(|g| *g = 0.0);
            gw2.iter_mut().for_each(|g| *g = 0.0);
            let mut gb2 = [0.0; 2];
            for &i in chunk {
                let xi = data.row(i);
                let (h, prob) = net.activations(xi);
                let target = [f64::from(1 - y[i]), f64::from(y[i])];
                let dz = [prob[0] - target[0], prob[1] - target[1]];
                let mut dh = vec![0.0; hidden_n];
                for (c, &dzc) in dz.iter().enumerate() {
                    gb2[c] += dzc;
                    let row = &net.output.weights[c * hidden_n..(c + 1) * hidden_n];
                    for j in 0..hidden_n {
                        gw2[c * hidden_n + j] += dzc * h[j];
                        dh[j] += dzc * row[j];
                    }
                }
                for j in 0..hidden_n {
                    if h[j] <= 0.0 {
                        continue;
                    }
                    gb1[j] += dh[j];
                    for (g, v) in gw1[j * d..(j + 1) * d].iter_mut().zip(xi) {
                        *g += dh[j] * v;
                    }
                }
            }
            let scale = p.learning_rate / chunk.len() as f64;
            for (w, g) in net.hidden.weights.iter_mut().zip(&gw1) {
                *w -= scale * g;
            }
            for (b, g) in net.hidden.bias.iter_mut().zip(&gb1) {
                *b -= scale * g;
            }
            for (w, g) in net.output.weights.iter_mut().zip(&gw2) {
                *w -= scale * g;
            }
            for (b, g) in net.output.bias.iter_mut().zip(&gb2) {
                *b -= scale * g;
            }
        }
    }
    net
}
