//! Time bucketing, background padding and per-window event ratios.
//!
//! Buckets are half-open UTC intervals `[k * B, (k + 1) * B)`. Reporting
//! windows group `aggregate_buckets` consecutive buckets, anchored at the
//! first bucket of the stream.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabeledDataset, PointCloud};
use crate::ingest::format_timestamp;
use crate::pipeline::FittedPipeline;
use crate::stats::pearson;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    pub bucket_seconds: i64,
    pub aggregate_buckets: usize,
    pub cap_per_bucket: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            bucket_seconds: 21_600,
            aggregate_buckets: 28,
            cap_per_bucket: 200,
        }
    }
}

impl WindowSpec {
    pub fn window_seconds(&self) -> i64 {
        self.bucket_seconds * self.aggregate_buckets as i64
    }

    pub fn validate(&self) -> Result<()> {
        if self.bucket_seconds <= 0 || self.aggregate_buckets == 0 || self.cap_per_bucket == 0 {
            return Err(Error::invalid(
                "bucket_seconds, aggregate_buckets and cap_per_bucket must be positive",
            ));
        }
        Ok(())
    }
}

/// One embedded, labeled record of a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamItem {
    pub id: String,
    pub timestamp: Option<i64>,
    pub label: u8,
    pub vector: Vec<f64>,
}

impl StreamItem {
    /// Items of a dataset with ids `{prefix}{row}`.
    pub fn from_dataset(ds: &LabeledDataset, prefix: &str) -> Vec<StreamItem> {
        (0..ds.len())
            .map(|i| StreamItem {
                id: format!("{prefix}{i}"),
                timestamp: ds.timestamps.as_ref().map(|t| t[i]),
                label: ds.labels[i],
                vector: ds.cloud.point(i).to_vec(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bucket {
    /// `floor(timestamp / bucket_seconds)`.
    pub index: i64,
    pub items: Vec<StreamItem>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub index: usize,
    pub start: i64,
    pub end: i64,
    /// All `aggregate_buckets` buckets of the window, empty ones included.
    pub buckets: Vec<Bucket>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.buckets.iter().map(|b| b.items.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn items(&self) -> impl Iterator<Item = &StreamItem> {
        self.buckets.iter().flat_map(|b| b.items.iter())
    }
}

/// Assigns items to buckets and buckets to windows.
///
/// Items keep their input order inside a bucket. A bucket holding more than
/// `cap_per_bucket` items is subsampled without replacement; the draw for
/// bucket `k` uses stream `k` of a generator seeded with `seed`, so it does
/// not depend on other buckets.
pub fn bucketize(items: &[StreamItem], spec: &WindowSpec, seed: u64) -> Result<Vec<Window>> {
    spec.validate()?;
    let missing: Vec<&str> = items
        .iter()
        .filter(|it| it.timestamp.is_none())
        .map(|it| it.id.as_str())
        .collect();
    if !missing.is_empty() {
        let shown = missing.iter().take(10).copied().collect::<Vec<_>>().join(", ");
        let more = if missing.len() > 10 {
            format!(" and {} more", missing.len() - 10)
        } else {
            String::new()
        };
        return Err(Error::invalid(format!("records without timestamp: {shown}{more}")));
    }
    if items.is_empty() {
        return Ok(Vec::new());
    }

    let mut groups: BTreeMap<i64, Vec<&StreamItem>> = BTreeMap::new();
    for it in items {
        let t = it.timestamp.expect("checked above");
        groups.entry(t.div_euclid(spec.bucket_seconds)).or_default().push(it);
    }
    let first = *groups.keys().next().expect("nonempty");
    let last = *groups.keys().next_back().expect("nonempty");
    let agg = spec.aggregate_buckets as i64;
    let n_windows = ((last - first).div_euclid(agg) + 1) as usize;

    let mut windows: Vec<Window> = (0..n_windows)
        .map(|w| {
            let k0 = first + w as i64 * agg;
            Window {
                index: w,
                start: k0 * spec.bucket_seconds,
                end: (k0 + agg) * spec.bucket_seconds,
                buckets: (0..agg)
                    .map(|j| Bucket {
                        index: k0 + j,
                        items: Vec::new(),
                    })
                    .collect(),
            }
        })
        .collect();

    for (k, members) in groups {
        let offset = k - first;
        let w = offset.div_euclid(agg) as usize;
        let slot = offset.rem_euclid(agg) as usize;
        let kept: Vec<&StreamItem> = if members.len() > spec.cap_per_bucket {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut idx = sample(&mut rng, members.len(), spec.cap_per_bucket).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| members[i]).collect()
        } else {
            members
        };
        windows[w].buckets[slot].items = kept.into_iter().cloned().collect();
    }
    Ok(windows)
}

/// Fills every bucket of `window` up to `target` items with draws without
/// replacement from `pool`. Padding items take the bucket's start time and
/// label 0. The draw depends only on `seed` and the window index.
pub fn pad_with_background(
    window: &Window,
    pool: &[StreamItem],
    target: usize,
    bucket_seconds: i64,
    seed: u64,
) -> Result<Window> {
    if let Some(bad) = pool.iter().find(|it| it.label != 0) {
        return Err(Error::invalid(format!(
            "background pool item '{}' is labeled {}",
            bad.id, bad.label
        )));
    }
    let needed: usize = window
        .buckets
        .iter()
        .map(|b| target.saturating_sub(b.items.len()))
        .sum();
    if needed > pool.len() {
        return Err(Error::Resource(format!(
            "window {} needs {needed} background records, pool has {}",
            window.index,
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window.index as u64);
    let mut draws = sample(&mut rng, pool.len(), needed).into_iter();
    let mut out = window.clone();
    for b in &mut out.buckets {
        while b.items.len() < target {
            let src = &pool[draws.next().expect("drew exactly `needed`")];
            b.items.push(StreamItem {
                timestamp: Some(b.index * bucket_seconds),
                label: 0,
                ..src.clone()
            });
        }
    }
    Ok(out)
}

/// Anything that labels the points of one window.
pub trait Detector: Sync {
    /// Predicted labels for `cloud`. `labels` are the true labels and are
    /// meant for oracle detectors only.
    fn detect(&self, cloud: &PointCloud, labels: &[u8]) -> Result<Vec<u8>>;
}

impl Detector for FittedPipeline {
    fn detect(&self, cloud: &PointCloud, _labels: &[u8]) -> Result<Vec<u8>> {
        self.predict(cloud)
    }
}

/// Returns the true labels.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleDetector;

impl Detector for OracleDetector {
    fn detect(&self, _cloud: &PointCloud, labels: &[u8]) -> Result<Vec<u8>> {
        Ok(labels.to_vec())
    }
}

/// Per-window true and predicted event ratios. A window with count 0 has
/// both ratios set to 0 and is skipped by [`series_correlation`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSeries {
    pub window_end: Vec<i64>,
    pub true_ratio: Vec<f64>,
    pub predicted_ratio: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RatioSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `window_end,true_ratio,predicted_ratio,count` with RFC 3339 ends.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "window_end,true_ratio,predicted_ratio,count")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                format_timestamp(self.window_end[i]),
                self.true_ratio[i],
                self.predicted_ratio[i],
                self.counts[i]
            )?;
        }
        Ok(())
    }
}

fn ratio(labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().map(|&l| f64::from(l)).sum::<f64>() / labels.len() as f64
}

/// Runs `detector` on every window independently (in parallel) and collects
/// the ratios in window order.
pub fn run_detector(windows: &[Window], detector: &dyn Detector) -> Result<RatioSeries> {
    let rows: Vec<Result<(f64, f64, usize)>> = windows
        .par_iter()
        .map(|w| {
            if w.is_empty() {
                return Ok((0.0, 0.0, 0));
            }
            let vectors: Vec<&[f64]> = w.items().map(|it| it.vector.as_slice()).collect();
            let labels: Vec<u8> = w.items().map(|it| it.label).collect();
            let cloud = PointCloud::from_rows(&vectors)?;
            let pred = detector.detect(&cloud, &labels)?;
            if pred.len() != labels.len() {
                return Err(Error::invalid("detector returned the wrong number of labels"));
            }
            Ok((ratio(&labels), ratio(&pred), labels.len()))
        })
        .collect();
    let mut series = RatioSeries {
        window_end: Vec::with_capacity(windows.len()),
        true_ratio: Vec::with_capacity(windows.len()),
        predicted_ratio: Vec::with_capacity(windows.len()),
        counts: Vec::with_capacity(windows.len()),
    };
    for (w, row) in windows.iter().zip(rows) {
        let (t, p, c) = row?;
        series.window_end.push(w.end);
        series.true_ratio.push(t);
        series.predicted_ratio.push(p);
        series.counts.push(c);
    }
    Ok(series)
}

/// Pearson r of true against predicted ratios over nonempty windows.
pub fn series_correlation(series: &RatioSeries) -> Result<f64> {
    let keep: Vec<usize> = (0..series.len()).filter(|&i| series.counts[i] > 0).collect();
    let t: Vec<f64> = keep.iter().map(|&i| series.true_ratio[i]).collect();
    let p: Vec<f64> = keep.iter().map(|&i| series.predicted_ratio[i]).collect();
    pearson(&t, &p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: usize, t: i64, label: u8) -> StreamItem {
        StreamItem {
            id: format!("r{id}"),
            timestamp: Some(t),
            label,
            vector: vec![id as f64, 1.0],
        }
    }

    fn spec(cap: usize) -> WindowSpec {
        WindowSpec {
            cap_per_bucket: cap,
            ..WindowSpec::default()
        }
    }

    #[test]
    fn bucket_boundaries() {
        let items = [item(0, 0, 0), item(1, 21_599, 0), item(2, 21_600, 1)];
        let w = bucketize(&items, &spec(200), 0).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].buckets[0].items.len(), 2);
        assert_eq!(w[0].buckets[1].items[0].id, "r2");
        assert_eq!((w[0].start, w[0].end), (0, 28 * 21_600));
    }

    #[test]
    fn negative_times_floor() {
        let items = [item(0, -1, 0), item(1, 0, 0)];
        let w = bucketize(&items, &spec(200), 0).unwrap();
        assert_eq!(w[0].buckets[0].index, -1);
        assert_eq!(w[0].buckets[1].index, 0);
    }

    #[test]
    fn windows_anchor_at_first_bucket() {
        let b = 21_600;
        let items = [item(0, 5 * b, 0), item(1, 5 * b + 28 * b, 0), item(2, 5 * b + 27 * b, 1)];
        let w = bucketize(&items, &spec(200), 0).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].start, 5 * b);
        assert_eq!(w[0].len(), 2);
        assert_eq!(w[1].len(), 1);
    }

    #[test]
    fn cap_is_deterministic() {
        let items: Vec<StreamItem> = (0..250).map(|i| item(i, i as i64, 0)).collect();
        let a = bucketize(&items, &spec(200), 9).unwrap();
        assert_eq!(a[0].buckets[0].items.len(), 200);
        assert_eq!(a, bucketize(&items, &spec(200), 9).unwrap());
        assert_ne!(a, bucketize(&items, &spec(200), 10).unwrap());
    }

    #[test]
    fn missing_timestamps_are_listed() {
        let mut items = vec![item(0, 0, 0), item(1, 1, 0), item(2, 2, 0)];
        items[1].timestamp = None;
        match bucketize(&items, &spec(200), 0) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("r1") && !msg.contains("r0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn padding() {
        let items: Vec<StreamItem> = (0..150).map(|i| item(i, 0, 1)).collect();
        let windows = bucketize(
            &items,
            &WindowSpec {
                aggregate_buckets: 1,
                ..spec(200)
            },
            0,
        )
        .unwrap();
        let pool: Vec<StreamItem> = (0..80).map(|i| item(1000 + i, 99, 0)).collect();
        let padded = pad_with_background(&windows[0], &pool, 200, 21_600, 3).unwrap();
        assert_eq!(padded.len(), 200);
        assert_eq!(padded.items().filter(|it| it.label == 0).count(), 50);
        assert!(padded.items().all(|it| it.timestamp == Some(0)));
        assert_eq!(padded, pad_with_background(&windows[0], &pool, 200, 21_600, 3).unwrap());
        let ids: std::collections::HashSet<&str> = padded.items().map(|it| it.id.as_str()).collect();
        assert_eq!(ids.len(), 200);

        let same = pad_with_background(&windows[0], &pool, 150, 21_600, 3).unwrap();
        assert_eq!(same, windows[0]);

        assert!(matches!(
            pad_with_background(&windows[0], &pool[..10], 200, 21_600, 3),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn oracle_series() {
        let items: Vec<StreamItem> = (0..60)
            .map(|i| item(i, (i as i64 / 10) * 21_600, u8::from(i % 10 < i / 10)))
            .collect();
        let windows = bucketize(
            &items,
            &WindowSpec {
                aggregate_buckets: 1,
                ..spec(200)
            },
            0,
        )
        .unwrap();
        let s = run_detector(&windows, &OracleDetector).unwrap();
        assert_eq!(s.true_ratio, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(s.true_ratio, s.predicted_ratio);
        assert_eq!(s.counts, vec![10; 6]);
        assert_eq!(series_correlation(&s).unwrap(), 1.0);

        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("window_end,true_ratio,predicted_ratio,count\n1970-01-01T06:00:00Z,0,0,10\n"));
    }

    #[test]
    fn empty_windows_are_flagged_and_skipped() {
        let b = 21_600;
        let items = [
            item(0, 0, 0),
            item(1, 2 * b, 1),
            item(2, 2 * b + 1, 0),
            item(3, 3 * b, 1),
            item(4, 4 * b, 1),
        ];
        let windows = bucketize(
            &items,
            &WindowSpec {
                aggregate_buckets: 1,
                ..spec(200)
            },
            0,
        )
        .unwrap();
        assert_eq!(windows.len(), 5);
        let s = run_detector(&windows, &OracleDetector).unwrap();
        assert_eq!(s.counts, vec![1, 0, 2, 1, 1]);
        assert_eq!(series_correlation(&s).unwrap(), 1.0);
    }

    #[test]
    fn constant_prediction_is_undefined() {
        let s = RatioSeries {
            window_end: vec![1, 2, 3],
            true_ratio: vec![0.1, 0.2, 0.3],
            predicted_ratio: vec![0.5; 3],
            counts: vec![10; 3],
        };
        assert!(matches!(series_correlation(&s), Err(Error::UndefinedCorrelation(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bucketing_is_a_partition(times in proptest::collection::vec(-200_000i64..2_000_000, 1..120), agg in 1usize..5) {
                let items: Vec<StreamItem> = times.iter().enumerate().map(|(i, &t)| item(i, t, (i % 2) as u8)).collect();
                let s = WindowSpec { aggregate_buckets: agg, ..spec(1000) };
                let windows = bucketize(&items, &s, 0).unwrap();
                let total: usize = windows.iter().map(Window::len).sum();
                prop_assert_eq!(total, items.len());
                for w in &windows {
                    prop_assert_eq!(w.buckets.len(), agg);
                    for b in &w.buckets {
                        for it in &b.items {
                            let t = it.timestamp.unwrap();
                            prop_assert!(t >= b.index * s.bucket_seconds && t < (b.index + 1) * s.bucket_seconds);
                            prop_assert!(t >= w.start && t < w.end);
                        }
                    }
                }
            }

            #[test]
            fn true_ratio_ignores_order(labels in proptest::collection::vec(0u8..2, 1..60), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                let items: Vec<StreamItem> = labels.iter().enumerate().map(|(i, &l)| item(i, 0, l)).collect();
                let mut shuffled = items.clone();
                shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let a = run_detector(&bucketize(&items, &spec(1000), 0).unwrap(), &OracleDetector).unwrap();
                let b = run_detector(&bucketize(&shuffled, &spec(1000), 0).unwrap(), &OracleDetector).unwrap();
                prop_assert_eq!(&a.true_ratio, &b.true_ratio);
                prop_assert_eq!(&a.true_ratio, &a.predicted_ratio);
            }
        }
    }
}
