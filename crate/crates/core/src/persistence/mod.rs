//! Vietoris-Rips persistence for homology dimensions 0, 1 and 2.
//!
//! Every finite pair records the simplices that create and destroy it, and
//! for each of those the edge whose length realizes the simplex's filtration
//! value. The gradient of any diagram function is routed through these edges.

mod entropy;
mod h0;
mod rips;
mod union_find;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::DistanceMatrix;

pub use entropy::{bar_lengths, persistence_entropy, Entropy};
pub use h0::vr_persistence_h0;
pub use rips::{simplex_count, vr_persistence, vr_persistence_with_budget, DEFAULT_SIMPLEX_BUDGET};
pub use union_find::UnionFind;

/// Index pair `(i, j)` with `i < j`.
pub type Edge = (usize, usize);

/// A simplex of the Rips complex: strictly increasing vertex indices and the
/// longest pairwise distance among them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub filtration_value: f64,
}

impl Simplex {
    pub fn vertex(v: usize) -> Self {
        Self {
            vertices: vec![v],
            filtration_value: 0.0,
        }
    }

    pub fn from_vertices(vertices: Vec<usize>, dm: &DistanceMatrix) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let filtration_value = critical_edge(&vertices, dm).map_or(0.0, |(i, j)| dm.get(i, j));
        Self {
            vertices,
            filtration_value,
        }
    }

    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// The lexicographically smallest vertex pair attaining the maximal distance
/// inside `vertices`, or `None` for a single vertex.
pub fn critical_edge(vertices: &[usize], dm: &DistanceMatrix) -> Option<Edge> {
    let mut best: Option<(Edge, f64)> = None;
    for (a, &i) in vertices.iter().enumerate() {
        for &j in &vertices[a + 1..] {
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let d = dm.get(lo, hi);
            best = match best {
                Some((e, bd)) if bd > d || (bd == d && e <= (lo, hi)) => Some((e, bd)),
                _ => Some(((lo, hi), d)),
            };
        }
    }
    best.map(|(e, _)| e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub birth_simplex: Simplex,
    pub death_simplex: Option<Simplex>,
    pub critical_birth_edge: Option<Edge>,
    pub critical_death_edge: Option<Edge>,
}

impl PersistencePair {
    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    /// Pairs ordered by dimension, then by the filtration order of their
    /// destroying simplex (essential classes last within a dimension).
    pub pairs: Vec<PersistencePair>,
    pub max_dim: usize,
}

impl PersistenceDiagram {
    pub fn pairs_in_dim(&self, dim: usize) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    pub fn finite_in_dim(&self, dim: usize) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs_in_dim(dim).filter(|p| p.is_finite())
    }

    pub fn num_infinite(&self, dim: usize) -> usize {
        self.pairs_in_dim(dim).filter(|p| !p.is_finite()).count()
    }

    /// `(dim, birth, death)` triples sorted, for multiset comparison.
    pub fn as_sorted_triples(&self) -> Vec<(usize, f64, f64)> {
        let mut v: Vec<_> = self
            .pairs
            .iter()
            .map(|p| (p.dim, p.birth, p.death))
            .collect();
        v.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });
        v
    }

    /// CSV with header `dim,birth,death`; essential classes have death `inf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dim,birth,death")?;
        for p in &self.pairs {
            if p.is_finite() {
                writeln!(w, "{},{},{}", p.dim, p.birth, p.death)?;
            } else {
                writeln!(w, "{},{},inf", p.dim, p.birth)?;
            }
        }
        Ok(())
    }
}
