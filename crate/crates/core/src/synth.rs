//! Synthetic two-blob "event" data and ratio scenarios.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabeledDataset, Matrix, PointCloud};
use crate::timeseries::WindowSpec;

/// First timestamp of generated scenarios (2020-06-01T00:00:00Z).
pub const SCENARIO_EPOCH: i64 = 1_590_969_600;

/// Two spherical Gaussians: background (label 0) and event (label 1).
///
/// The default event cluster is five times tighter than the background. Flow
/// displacements do not see absolute position, only local geometry, so two
/// blobs that differ by location alone are indistinguishable after the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobGenerator {
    pub background_mean: Vec<f64>,
    pub background_sigma: f64,
    pub event_mean: Vec<f64>,
    pub event_sigma: f64,
}

impl Default for BlobGenerator {
    fn default() -> Self {
        Self::new(16, 6.0, 0.2, 1.0)
    }
}

impl BlobGenerator {
    /// Background at the origin, event mean `separation` along the first axis.
    pub fn new(dim: usize, separation: f64, event_sigma: f64, background_sigma: f64) -> Self {
        let mut event_mean = vec![0.0; dim];
        if let Some(first) = event_mean.first_mut() {
            *first = separation;
        }
        Self {
            background_mean: vec![0.0; dim],
            background_sigma,
            event_mean,
            event_sigma,
        }
    }

    pub fn dim(&self) -> usize {
        self.background_mean.len()
    }

    /// Both means moved by `offset`.
    pub fn shifted(&self, offset: &[f64]) -> Self {
        let add = |m: &[f64]| m.iter().zip(offset).map(|(a, b)| a + b).collect();
        Self {
            background_mean: add(&self.background_mean),
            event_mean: add(&self.event_mean),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 || self.event_mean.len() != self.dim() {
            return Err(Error::invalid("blob means must share a positive dimension"));
        }
        let ok = |s: f64| s.is_finite() && s >= 0.0;
        if !ok(self.event_sigma) || !ok(self.background_sigma) {
            return Err(Error::invalid("blob sigmas must be finite and non-negative"));
        }
        if self.background_mean.iter().chain(&self.event_mean).any(|v| !v.is_finite()) {
            return Err(Error::invalid("blob means must be finite"));
        }
        Ok(())
    }

    fn draw(&self, label: u8, rng: &mut impl Rng, out: &mut Vec<f64>) {
        let (mean, sigma) = if label == 1 {
            (&self.event_mean, self.event_sigma)
        } else {
            (&self.background_mean, self.background_sigma)
        };
        for m in mean {
            let z: f64 = rng.sample(StandardNormal);
            out.push(m + sigma * z);
        }
    }

    /// `n_event + n_background` points in shuffled order.
    pub fn sample(&self, n_event: usize, n_background: usize, rng: &mut impl Rng) -> Result<LabeledDataset> {
        self.validate()?;
        let mut labels: Vec<u8> = std::iter::repeat(1)
            .take(n_event)
            .chain(std::iter::repeat(0).take(n_background))
            .collect();
        labels.shuffle(rng);
        let mut data = Vec::with_capacity(labels.len() * self.dim());
        for &l in &labels {
            self.draw(l, rng, &mut data);
        }
        let cloud = PointCloud::new(Matrix::from_vec(labels.len(), self.dim(), data)?)?;
        LabeledDataset::new(cloud, labels, None)
    }
}

pub fn blob_dataset(gen: &BlobGenerator, n_event: usize, n_background: usize, seed: u64) -> Result<LabeledDataset> {
    gen.sample(n_event, n_background, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Event ratio as a function of the window index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioShape {
    Constant { value: f64 },
    /// `before` for windows `< at`, `after` from window `at` on.
    Step { before: f64, after: f64, at: usize },
    /// Linear from `start` (first window) to `end` (last window).
    Ramp { start: f64, end: f64 },
    /// One value per window.
    Custom { values: Vec<f64> },
}

impl RatioShape {
    pub fn ratio(&self, window: usize, windows: usize) -> f64 {
        match self {
            RatioShape::Constant { value } => *value,
            RatioShape::Step { before, after, at } => {
                if window < *at {
                    *before
                } else {
                    *after
                }
            }
            RatioShape::Ramp { start, end } => {
                if windows <= 1 {
                    *start
                } else {
                    start + (end - start) * window as f64 / (windows - 1) as f64
                }
            }
            RatioShape::Custom { values } => values[window],
        }
    }

    pub fn validate(&self, windows: usize) -> Result<()> {
        if let RatioShape::Custom { values } = self {
            if values.len() != windows {
                return Err(Error::invalid(format!(
                    "custom shape has {} values for {windows} windows",
                    values.len()
                )));
            }
        }
        for w in 0..windows {
            let r = self.ratio(w, windows);
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(format!("ratio {r} at window {w} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Event count of window `w`: `round(ratio * per_window)`.
    pub fn event_count(&self, window: usize, windows: usize, per_window: usize) -> usize {
        (self.ratio(window, windows) * per_window as f64).round() as usize
    }
}

/// A timestamped stream of `windows * per_window` points.
///
/// Window `w` covers `[SCENARIO_EPOCH + w * W, SCENARIO_EPOCH + (w + 1) * W)`
/// with `W` the reporting window of `spec`. Its points are spread round-robin
/// over the window's buckets at uniform offsets inside each bucket.
pub fn synth_scenario(
    shape: &RatioShape,
    windows: usize,
    per_window: usize,
    gen: &BlobGenerator,
    spec: &WindowSpec,
    seed: u64,
) -> Result<LabeledDataset> {
    if windows == 0 || per_window == 0 {
        return Err(Error::invalid("scenario needs at least one window and one point per window"));
    }
    shape.validate(windows)?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Option<LabeledDataset> = None;
    for w in 0..windows {
        let k = shape.event_count(w, windows, per_window);
        let mut part = gen.sample(k, per_window - k, &mut rng)?;
        let window_start = SCENARIO_EPOCH + w as i64 * spec.window_seconds();
        let times = (0..per_window)
            .map(|j| {
                let bucket = (j % spec.aggregate_buckets) as i64;
                window_start + bucket * spec.bucket_seconds + rng.gen_range(0..spec.bucket_seconds)
            })
            .collect();
        part.timestamps = Some(times);
        out = Some(match out {
            None => part,
            Some(acc) => acc.concat(&part)?,
        });
    }
    Ok(out.expect("at least one window"))
}
