//! Joins tweet records with their embeddings.

use std::collections::HashMap;
use std::path::PathBuf;

use persgrad::ingest::{clean_text, embedding_file_dim, hash_embed, load_embeddings, read_tweets};
use persgrad::timeseries::StreamItem;
use persgrad::{LabeledDataset, Matrix, PointCloud};

use crate::config::DataConfig;
use crate::Failure;

pub struct Records {
    pub ids: Vec<String>,
    pub cloud: PointCloud,
    pub labels: Vec<Option<u8>>,
    pub timestamps: Vec<Option<i64>>,
    /// Files read, in order, for the manifest.
    pub sources: Vec<PathBuf>,
}

fn list_ids(ids: &[&str]) -> String {
    let shown = ids.iter().take(10).copied().collect::<Vec<_>>().join(", ");
    if ids.len() > 10 {
        format!("{shown} and {} more", ids.len() - 10)
    } else {
        shown
    }
}

pub fn load(data: &DataConfig) -> Result<Records, Failure> {
    let tweets_path = data
        .tweets
        .clone()
        .ok_or_else(|| Failure::config("no input records: pass --input or set data.tweets"))?;
    if !tweets_path.exists() {
        return Err(Failure::config(format!("input file {} does not exist", tweets_path.display())));
    }
    let tweets = read_tweets(&tweets_path)?;
    if tweets.is_empty() {
        return Err(Failure::config(format!("{} holds no records", tweets_path.display())));
    }
    let mut sources = vec![tweets_path];

    let cloud = match &data.embeddings {
        Some(path) => {
            if !path.exists() {
                return Err(Failure::config(format!("embedding file {} does not exist", path.display())));
            }
            let dim = match data.embedding_dim {
                Some(d) => d,
                None => embedding_file_dim(path)?,
            };
            let (ids, cloud) = load_embeddings(path, dim)?;
            sources.push(path.clone());
            let row: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            let missing: Vec<&str> = tweets
                .iter()
                .filter(|t| !row.contains_key(t.id.as_str()))
                .map(|t| t.id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(Failure::config(format!(
                    "{}: no embedding for records {}",
                    path.display(),
                    list_ids(&missing)
                )));
            }
            let idx: Vec<usize> = tweets.iter().map(|t| row[t.id.as_str()]).collect();
            cloud.select(&idx)?
        }
        None => {
            if data.hash_dim == 0 {
                return Err(Failure::config("data.hash_dim must be positive"));
            }
            let mut m = Matrix::zeros(tweets.len(), data.hash_dim);
            let mut empty = 0;
            for (i, t) in tweets.iter().enumerate() {
                let e = hash_embed(&clean_text(&t.text), data.hash_dim);
                empty += usize::from(e.empty);
                m.row_mut(i).copy_from_slice(&e.vector);
            }
            if empty > 0 {
                eprintln!("warning: {empty} records have no text left after cleaning; embedded as zero vectors");
            }
            PointCloud::new(m)?
        }
    };

    Ok(Records {
        ids: tweets.iter().map(|t| t.id.clone()).collect(),
        labels: tweets.iter().map(|t| t.label).collect(),
        timestamps: tweets.iter().map(|t| t.created_at).collect(),
        cloud,
        sources,
    })
}

impl Records {
    fn require_labels(&self) -> Result<Vec<u8>, Failure> {
        let missing: Vec<&str> = self
            .ids
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.is_none())
            .map(|(id, _)| id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Failure::config(format!("records without label: {}", list_ids(&missing))));
        }
        Ok(self.labels.iter().map(|l| l.unwrap_or(0)).collect())
    }

    pub fn labeled(&self) -> Result<LabeledDataset, Failure> {
        Ok(LabeledDataset::new(self.cloud.clone(), self.require_labels()?, None)?)
    }

    pub fn stream_items(&self) -> Result<Vec<StreamItem>, Failure> {
        let labels = self.require_labels()?;
        Ok((0..self.ids.len())
            .map(|i| StreamItem {
                id: self.ids[i].clone(),
                timestamp: self.timestamps[i],
                label: labels[i],
                vector: self.cloud.point(i).to_vec(),
            })
            .collect())
    }
}
