//! Fixtures shared by the benchmarks.

use persgrad::synth::{blob_dataset, BlobGenerator};
use persgrad::{LabeledDataset, PointCloud};

/// Balanced two-blob dataset of `n` points in the default 16 dimensions.
pub fn blobs(n: usize, seed: u64) -> LabeledDataset {
    blob_dataset(&BlobGenerator::default(), n / 2, n - n / 2, seed).expect("valid generator")
}

/// Uniform-ish planar cloud for higher-dimensional homology.
pub fn planar(n: usize, seed: u64) -> PointCloud {
    let gen = BlobGenerator::new(2, 0.0, 1.0, 1.0);
    blob_dataset(&gen, 0, n, seed).expect("valid generator").cloud
}
