//! Boundary-matrix reduction over Z/2 on the Rips skeleton.
//!
//! Simplices of each dimension are ordered by `(filtration value, vertex
//! lexicographic order)`. Columns are reduced from the top dimension down so
//! that every simplex found as a pivot can be skipped (cleared) when its own
//! column comes up. Dimension 0 is delegated to the union-find routine.

use super::h0::{merge_sequence, sorted_edges};
use super::{critical_edge, vr_persistence_h0, PersistenceDiagram, PersistencePair, Simplex};
use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;

/// Upper bound on the number of simplices materialized by [`vr_persistence`].
pub const DEFAULT_SIMPLEX_BUDGET: usize = 2_000_000;

const NONE: u32 = u32::MAX;

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of simplices in the `(max_dim + 1)`-skeleton of the full simplex on
/// `n` vertices.
pub fn simplex_count(n: usize, max_dim: usize) -> u128 {
    (1..=max_dim + 2).map(|m| binomial(n as u128, m as u128)).sum()
}

/// Simplices of one dimension in filtration order.
struct Layer {
    /// Vertex count per simplex.
    arity: usize,
    verts: Vec<u32>,
    values: Vec<f64>,
    /// Colexicographic rank -> filtration position.
    position: Vec<u32>,
}

impl Layer {
    fn vertices(&self, idx: usize) -> &[u32] {
        &self.verts[idx * self.arity..(idx + 1) * self.arity]
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    fn simplex(&self, idx: usize, dm: &DistanceMatrix) -> Simplex {
        Simplex::from_vertices(self.vertices(idx).iter().map(|&v| v as usize).collect(), dm)
    }
}

struct Binomials {
    table: Vec<[usize; 5]>,
}

impl Binomials {
    fn new(n: usize) -> Self {
        let table = (0..=n)
            .map(|v| {
                let mut row = [0usize; 5];
                for (k, slot) in row.iter_mut().enumerate() {
                    *slot = binomial(v as u128, k as u128) as usize;
                }
                row
            })
            .collect();
        Self { table }
    }

    /// Colex rank of a strictly increasing vertex tuple.
    fn rank(&self, verts: impl Iterator<Item = u32>) -> usize {
        verts
            .enumerate()
            .map(|(t, v)| self.table[v as usize][t + 1])
            .sum()
    }
}

fn build_layer(dm: &DistanceMatrix, arity: usize, binom: &Binomials) -> Layer {
    let n = dm.len();
    let count = binomial(n as u128, arity as u128) as usize;
    let mut raw_verts: Vec<u32> = Vec::with_capacity(count * arity);
    let mut raw_values: Vec<f64> = Vec::with_capacity(count);

    if arity <= n {
        let mut comb: Vec<usize> = (0..arity).collect();
        loop {
            let mut value = 0.0_f64;
            for a in 0..arity {
                for b in a + 1..arity {
                    value = value.max(dm.get(comb[a], comb[b]));
                }
            }
            raw_verts.extend(comb.iter().map(|&v| v as u32));
            raw_values.push(value);

            // next combination in lexicographic order
            let mut advanced = false;
            for t in (0..arity).rev() {
                if comb[t] < n - arity + t {
                    comb[t] += 1;
                    for u in t + 1..arity {
                        comb[u] = comb[u - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }

    // enumeration is lexicographic, so a stable sort on value yields
    // (value, lex) order
    let mut order: Vec<u32> = (0..raw_values.len() as u32).collect();
    order.sort_by(|&a, &b| raw_values[a as usize].total_cmp(&raw_values[b as usize]));

    let mut verts = Vec::with_capacity(raw_verts.len());
    let mut values = Vec::with_capacity(raw_values.len());
    let mut position = vec![NONE; raw_values.len()];
    for (pos, &old) in order.iter().enumerate() {
        let vs = &raw_verts[old as usize * arity..(old as usize + 1) * arity];
        position[binom.rank(vs.iter().copied())] = pos as u32;
        verts.extend_from_slice(vs);
        values.push(raw_values[old as usize]);
    }
    Layer {
        arity,
        verts,
        values,
        position,
    }
}

fn boundary(layer: &Layer, idx: usize, faces: &Layer, binom: &Binomials) -> Vec<u32> {
    let vs = layer.vertices(idx);
    let mut col: Vec<u32> = (0..vs.len())
        .map(|skip| {
            let rank = binom.rank(
                vs.iter()
                    .enumerate()
                    .filter(|&(t, _)| t != skip)
                    .map(|(_, &v)| v),
            );
            faces.position[rank]
        })
        .collect();
    col.sort_unstable();
    col
}

/// Symmetric difference of two sorted columns.
fn add_columns(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Reduces the columns of `cols` (boundaries in `rows`). Returns, per column,
/// its pivot row or `NONE` if it reduced to zero or was cleared.
fn reduce(cols: &Layer, rows: &Layer, cleared: &[bool], binom: &Binomials) -> Vec<u32> {
    let mut owner = vec![NONE; rows.len()];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); cols.len()];
    let mut pivots = vec![NONE; cols.len()];
    for c in 0..cols.len() {
        if cleared[c] {
            continue;
        }
        let mut col = boundary(cols, c, rows, binom);
        while let Some(&low) = col.last() {
            let o = owner[low as usize];
            if o == NONE {
                owner[low as usize] = c as u32;
                pivots[c] = low;
                break;
            }
            col = add_columns(&col, &reduced[o as usize]);
        }
        reduced[c] = col;
    }
    pivots
}

pub fn vr_persistence(dm: &DistanceMatrix, max_dim: usize) -> Result<PersistenceDiagram> {
    vr_persistence_with_budget(dm, max_dim, DEFAULT_SIMPLEX_BUDGET)
}

/// Rips persistence in dimensions `0..=max_dim` (`max_dim <= 2`).
///
/// The `(max_dim + 1)`-skeleton is materialized; if it holds more than
/// `budget` simplices a [`Error::Resource`] is returned.
pub fn vr_persistence_with_budget(
    dm: &DistanceMatrix,
    max_dim: usize,
    budget: usize,
) -> Result<PersistenceDiagram> {
    if max_dim > 2 {
        return Err(Error::invalid(format!(
            "homology dimension {max_dim} not supported (max 2)"
        )));
    }
    let n = dm.len();
    let mut diagram = vr_persistence_h0(dm);
    diagram.max_dim = max_dim;
    if max_dim == 0 {
        return Ok(diagram);
    }
    let needed = simplex_count(n, max_dim);
    if needed > budget as u128 {
        return Err(Error::Resource(format!(
            "simplex budget of {budget} exceeded: {n} points up to dimension {} need {needed} simplices",
            max_dim + 1
        )));
    }

    let binom = Binomials::new(n);
    // layers[k] holds the k-simplices for k = 1..=max_dim+1
    let mut layers: Vec<Option<Layer>> = (0..=max_dim + 1).map(|_| None).collect();
    for (k, slot) in layers.iter_mut().enumerate().skip(1) {
        *slot = Some(build_layer(dm, k + 1, &binom));
    }
    let layer = |k: usize| layers[k].as_ref().expect("layer built");

    // pivots[k][c]: pivot row (in layer k-1) of reduced column c of layer k
    let mut pivots: Vec<Vec<u32>> = vec![Vec::new(); max_dim + 2];
    let mut cleared_next: Vec<bool> = vec![false; layer(max_dim + 1).len()];
    for k in (2..=max_dim + 1).rev() {
        let cols = layer(k);
        let rows = layer(k - 1);
        let p = reduce(cols, rows, &cleared_next, &binom);
        let mut cleared = vec![false; rows.len()];
        for &r in &p {
            if r != NONE {
                cleared[r as usize] = true;
            }
        }
        pivots[k] = p;
        cleared_next = cleared;
    }

    // positive[k][s]: simplex s of layer k creates a class
    let mut positive: Vec<Vec<bool>> = vec![Vec::new(); max_dim + 1];
    {
        let edges = layer(1);
        let sorted = sorted_edges(dm);
        debug_assert_eq!(sorted.len(), edges.len());
        let mut pos = vec![true; edges.len()];
        for ((_, i, j), _) in merge_sequence(n, &sorted) {
            let rank = binom.rank([i as u32, j as u32].into_iter());
            pos[edges.position[rank] as usize] = false;
        }
        positive[1] = pos;
    }
    for k in 2..=max_dim {
        positive[k] = pivots[k].iter().map(|&r| r == NONE).collect();
    }

    let mut higher = Vec::new();
    for k in 1..=max_dim {
        let rows = layer(k);
        let cols = layer(k + 1);
        let mut killed = vec![false; rows.len()];
        for (c, &r) in pivots[k + 1].iter().enumerate() {
            if r == NONE {
                continue;
            }
            killed[r as usize] = true;
            let (birth, death) = (rows.values[r as usize], cols.values[c]);
            if death <= birth {
                continue;
            }
            let birth_simplex = rows.simplex(r as usize, dm);
            let death_simplex = cols.simplex(c, dm);
            higher.push(PersistencePair {
                dim: k,
                birth,
                death,
                critical_birth_edge: critical_edge(&birth_simplex.vertices, dm),
                critical_death_edge: critical_edge(&death_simplex.vertices, dm),
                birth_simplex,
                death_simplex: Some(death_simplex),
            });
        }
        for s in 0..rows.len() {
            if positive[k][s] && !killed[s] {
                let birth_simplex = rows.simplex(s, dm);
                higher.push(PersistencePair {
                    dim: k,
                    birth: rows.values[s],
                    death: f64::INFINITY,
                    critical_birth_edge: critical_edge(&birth_simplex.vertices, dm),
                    critical_death_edge: None,
                    birth_simplex,
                    death_simplex: None,
                });
            }
        }
    }
    diagram.pairs.extend(higher);
    Ok(diagram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pairwise_distances, PointCloud};

    #[test]
    fn unit_square_has_one_loop() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let diag = vr_persistence(&pairwise_distances(&c), 1).unwrap();
        let loops: Vec<_> = diag.pairs_in_dim(1).collect();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].birth, 1.0);
        assert_eq!(loops[0].death, 2f64.sqrt());
        let (i, j) = loops[0].critical_death_edge.unwrap();
        assert_eq!(pairwise_distances(&c).get(i, j), 2f64.sqrt());
    }

    #[test]
    fn collinear_points_have_no_loops() {
        let c = PointCloud::from_rows(&[[0.0], [1.0], [2.5]]).unwrap();
        let diag = vr_persistence(&pairwise_distances(&c), 1).unwrap();
        assert_eq!(diag.pairs_in_dim(1).count(), 0);
    }

    #[test]
    fn octahedron_has_a_void() {
        let c = PointCloud::from_rows(&[
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ])
        .unwrap();
        let diag = vr_persistence(&pairwise_distances(&c), 2).unwrap();
        let voids: Vec<_> = diag.pairs_in_dim(2).collect();
        assert_eq!(voids.len(), 1);
        assert_eq!(voids[0].birth, 2f64.sqrt());
        assert_eq!(voids[0].death, 2.0);
        assert_eq!(diag.pairs_in_dim(1).count(), 0);
    }

    #[test]
    fn budget_exceeded_is_resource_error() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        let err = vr_persistence_with_budget(&pairwise_distances(&c), 2, 1000).unwrap_err();
        match err {
            Error::Resource(msg) => assert!(msg.contains("1000")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dim_three_rejected() {
        let c = PointCloud::from_rows(&[[0.0]]).unwrap();
        assert!(vr_persistence(&pairwise_distances(&c), 3).is_err());
    }

    #[test]
    fn simplex_counts() {
        assert_eq!(simplex_count(4, 1), 4 + 6 + 4);
        assert_eq!(simplex_count(60, 2), 60 + 1770 + 34220 + 487635);
    }

    #[test]
    fn tiny_clouds() {
        for n in 1..4 {
            let rows: Vec<[f64; 2]> = (0..n).map(|i| [i as f64, (i * i) as f64]).collect();
            let c = PointCloud::from_rows(&rows).unwrap();
            let diag = vr_persistence(&pairwise_distances(&c), 2).unwrap();
            assert_eq!(diag.pairs_in_dim(0).count(), n);
            assert_eq!(diag.pairs_in_dim(1).count(), 0);
            assert_eq!(diag.pairs_in_dim(2).count(), 0);
        }
    }
}
