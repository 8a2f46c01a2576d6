use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::metrics::accuracy;
use super::train;
use crate::error::{Error, Result};
use crate::geometry::LabeledDataset;
use crate::pipeline::{extract_features, PipelineConfig};
use crate::stats::{derive_seed, mean, std_dev};

/// Stratified partition of `0..labels.len()` into `k` test folds.
///
/// Each class is shuffled with the seeded generator and dealt round-robin;
/// the deal continues across classes, so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut dealt = 0usize;
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::invalid(format!(
                "class {class} has {} samples, too few to stratify into {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[dealt % k].push(i);
            dealt += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Indices of a class-balanced subsample: every minority sample plus a
/// seeded draw without replacement from the majority, in original order.
pub fn balance_indices(labels: &[u8], seed: u64) -> Result<Vec<usize>> {
    let ones: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let zeros: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if ones.is_empty() || zeros.is_empty() {
        return Err(Error::invalid(format!(
            "cannot balance: class {} is empty",
            u8::from(ones.is_empty())
        )));
    }
    let (minority, mut majority) = if ones.len() <= zeros.len() {
        (ones, zeros)
    } else {
        (zeros, ones)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    majority.shuffle(&mut rng);
    majority.truncate(minority.len());
    let mut out = minority;
    out.extend(majority);
    out.sort_unstable();
    Ok(out)
}

pub fn balance_classes(dataset: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    dataset.subset(&balance_indices(&dataset.labels, seed)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidation {
    pub fold_accuracies: Vec<f64>,
    pub fold_sizes: Vec<usize>,
}

impl CrossValidation {
    pub fn mean(&self) -> f64 {
        mean(&self.fold_accuracies)
    }

    pub fn std_dev(&self) -> f64 {
        std_dev(&self.fold_accuracies)
    }
}

/// Stratified k-fold accuracies of a pipeline.
///
/// Flow features are computed once on the whole dataset cloud, which is the
/// union of every fold's train and test part, so test points are evolved
/// alongside the training points. Training parts are balanced per fold when
/// the pipeline asks for it.
pub fn cross_validate(
    dataset: &LabeledDataset,
    cfg: &PipelineConfig,
    k_folds: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let folds = stratified_folds(&dataset.labels, k_folds, derive_seed(seed, 1))?;
    let features = extract_features(&dataset.cloud, &cfg.features)?;
    let results: Vec<Result<(f64, usize)>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; dataset.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let mut train_idx: Vec<usize> = (0..dataset.len()).filter(|&i| !in_test[i]).collect();
            if cfg.balance {
                let labels: Vec<u8> = train_idx.iter().map(|&i| dataset.labels[i]).collect();
                let keep = balance_indices(&labels, derive_seed(seed, 100 + f as u64))?;
                train_idx = keep.into_iter().map(|j| train_idx[j]).collect();
            }
            let y_train: Vec<u8> = train_idx.iter().map(|&i| dataset.labels[i]).collect();
            let model = train(
                &features.select_rows(&train_idx),
                &y_train,
                &cfg.model,
                derive_seed(seed, 1000 + f as u64),
            )?;
            let y_test: Vec<u8> = test.iter().map(|&i| dataset.labels[i]).collect();
            let pred = model.predict(&features.select_rows(test))?;
            Ok((accuracy(&y_test, &pred), test.len()))
        })
        .collect();
    let mut out = CrossValidation {
        fold_accuracies: Vec::with_capacity(k_folds),
        fold_sizes: Vec::with_capacity(k_folds),
    };
    for r in results {
        let (acc, size) = r?;
        out.fold_accuracies.push(acc);
        out.fold_sizes.push(size);
    }
    Ok(out)
}
