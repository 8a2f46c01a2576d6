//! Point clouds and Euclidean distance primitives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows `idx` in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// `n` points in `R^d`, every coordinate finite, `n >= 1`, `d >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct PointCloud(Matrix);

impl PointCloud {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.rows() == 0 {
            return Err(Error::invalid("point cloud is empty"));
        }
        if points.cols() == 0 {
            return Err(Error::invalid("point cloud has zero dimensions"));
        }
        if let Some(pos) = points.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate at point {}, axis {}",
                pos / points.cols(),
                pos % points.cols()
            )));
        }
        Ok(Self(points))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Widens single-precision input.
    pub fn from_f32_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let wide: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| f64::from(v)).collect())
            .collect();
        Self::from_rows(&wide)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.rows()
    }

    /// Always false: a cloud holds at least one point.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn select(&self, idx: &[usize]) -> Result<PointCloud> {
        PointCloud::new(self.0.select_rows(idx))
    }

    /// Every point shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<PointCloud> {
        if offset.len() != self.dim() {
            return Err(Error::invalid("translation offset has wrong dimension"));
        }
        let mut m = self.0.clone();
        for i in 0..m.rows() {
            for (v, o) in m.row_mut(i).iter_mut().zip(offset) {
                *v += o;
            }
        }
        PointCloud::new(m)
    }
}

impl TryFrom<Matrix> for PointCloud {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        PointCloud::new(m)
    }
}

impl From<PointCloud> for Matrix {
    fn from(c: PointCloud) -> Matrix {
        c.0
    }
}

/// Symmetric matrix of pairwise Euclidean distances with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and nonnegativity.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::invalid("distance matrix has wrong size"));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let a = entries[i * n + j];
                if !(a.is_finite() && a >= 0.0) || a != entries[j * n + i] {
                    return Err(Error::invalid(format!(
                        "distance matrix entry ({i},{j}) is not a symmetric finite nonnegative value"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    let n = cloud.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let xi = cloud.point(i);
        for j in (i + 1)..n {
            let d = euclidean(xi, cloud.point(j));
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

/// Coordinate-wise mean of the points.
pub fn barycenter(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len() as f64;
    let mut acc = vec![0.0; cloud.dim()];
    for p in cloud.points().iter_rows() {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// A point cloud with binary labels (1 = event-related, 0 = not) and
/// optional UTC timestamps in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub cloud: PointCloud,
    pub labels: Vec<u8>,
    pub timestamps: Option<Vec<i64>>,
}

impl LabeledDataset {
    pub fn new(cloud: PointCloud, labels: Vec<u8>, timestamps: Option<Vec<i64>>) -> Result<Self> {
        if labels.len() != cloud.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} points",
                labels.len(),
                cloud.len()
            )));
        }
        if let Some(bad) = labels.iter().position(|&l| l > 1) {
            return Err(Error::invalid(format!(
                "label at row {bad} is {}, expected 0 or 1",
                labels[bad]
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != labels.len() {
                return Err(Error::invalid("timestamp count differs from point count"));
            }
        }
        Ok(Self {
            cloud,
            labels,
            timestamps,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `[count of class 0, count of class 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn subset(&self, idx: &[usize]) -> Result<LabeledDataset> {
        LabeledDataset::new(
            self.cloud.select(idx)?,
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.timestamps
                .as_ref()
                .map(|ts| idx.iter().map(|&i| ts[i]).collect()),
        )
    }

    /// Concatenates rows of `other` after `self`.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.cloud.dim() != other.cloud.dim() {
            return Err(Error::invalid("cannot concatenate datasets of different dimension"));
        }
        let mut data = self.cloud.points().as_slice().to_vec();
        data.extend_from_slice(other.cloud.points().as_slice());
        let n = self.len() + other.len();
        let cloud = PointCloud::new(Matrix::from_vec(n, self.cloud.dim(), data)?)?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let timestamps = match (&self.timestamps, &other.timestamps) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        LabeledDataset::new(cloud, labels, timestamps)
    }
}
