use super::{PersistenceDiagram, PersistencePair, Simplex, UnionFind};
use crate::geometry::DistanceMatrix;

/// Edges of the complete graph sorted by `(length, min index, max index)`.
pub(crate) fn sorted_edges(dm: &DistanceMatrix) -> Vec<(f64, usize, usize)> {
    let n = dm.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        let row = dm.row(i);
        for (j, &d) in row.iter().enumerate().skip(i + 1) {
            edges.push((d, i, j));
        }
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}

/// Kruskal over the sorted edges. Returns, in merge order, each merging edge
/// together with the oldest vertex of the component it absorbed.
pub(crate) fn merge_sequence(n: usize, edges: &[(f64, usize, usize)]) -> Vec<((f64, usize, usize), usize)> {
    let mut uf = UnionFind::new(n);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for &e in edges {
        if let Some(younger) = uf.union(e.1, e.2) {
            merges.push((e, younger));
            if merges.len() + 1 == n {
                break;
            }
        }
    }
    merges
}

/// Dimension-0 Rips persistence.
///
/// The finite bars are `(0, w)` for every edge `w` of the minimum spanning
/// tree; merges follow the edge order `(length, min index, max index)` and
/// the younger component (larger oldest vertex) dies. Zero-length merges are
/// dropped. One essential class is born at vertex 0.
pub fn vr_persistence_h0(dm: &DistanceMatrix) -> PersistenceDiagram {
    let n = dm.len();
    let edges = sorted_edges(dm);
    let mut pairs = Vec::with_capacity(n);
    for ((d, i, j), younger) in merge_sequence(n, &edges) {
        if d <= 0.0 {
            continue;
        }
        pairs.push(PersistencePair {
            dim: 0,
            birth: 0.0,
            death: d,
            birth_simplex: Simplex::vertex(younger),
            death_simplex: Some(Simplex {
                vertices: vec![i, j],
                filtration_value: d,
            }),
            critical_birth_edge: None,
            critical_death_edge: Some((i, j)),
        });
    }
    if n > 0 {
        pairs.push(PersistencePair {
            dim: 0,
            birth: 0.0,
            death: f64::INFINITY,
            birth_simplex: Simplex::vertex(0),
            death_simplex: None,
            critical_birth_edge: None,
            critical_death_edge: None,
        });
    }
    PersistenceDiagram { pairs, max_dim: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pairwise_distances, PointCloud};

    fn deaths(diag: &PersistenceDiagram) -> Vec<f64> {
        let mut d: Vec<f64> = diag.finite_in_dim(0).map(|p| p.death).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    #[test]
    fn two_points_single_merge() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let diag = vr_persistence_h0(&pairwise_distances(&c));
        assert_eq!(deaths(&diag), vec![2.0]);
        assert_eq!(diag.num_infinite(0), 1);
        let p = diag.finite_in_dim(0).next().unwrap();
        assert_eq!(p.critical_death_edge, Some((0, 1)));
    }

    #[test]
    fn collinear_zero_one_three() {
        let c = PointCloud::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let diag = vr_persistence_h0(&pairwise_distances(&c));
        assert_eq!(deaths(&diag), vec![1.0, 2.0]);
    }

    #[test]
    fn coincident_points_give_no_finite_bar() {
        let c = PointCloud::from_rows(&[[1.0, 1.0], [1.0, 1.0], [4.0, 5.0]]).unwrap();
        let diag = vr_persistence_h0(&pairwise_distances(&c));
        assert_eq!(deaths(&diag), vec![5.0]);
        assert_eq!(diag.num_infinite(0), 1);
    }

    #[test]
    fn critical_edge_realizes_death() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.3], [3.0, 1.0], [0.2, 4.0]]).unwrap();
        let dm = pairwise_distances(&c);
        for p in vr_persistence_h0(&dm).finite_in_dim(0) {
            let (i, j) = p.critical_death_edge.unwrap();
            assert_eq!(dm.get(i, j), p.death);
        }
    }

    #[test]
    fn tied_edges_merge_in_index_order() {
        // square with unit sides: edges (0,1),(0,2),(1,3),(2,3) all length 1
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let diag = vr_persistence_h0(&pairwise_distances(&c));
        let edges: Vec<_> = diag.finite_in_dim(0).map(|p| p.critical_death_edge.unwrap()).collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3)]);
    }
}
