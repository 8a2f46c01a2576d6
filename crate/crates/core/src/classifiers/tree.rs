//! CART trees on dense features.
//!
//! Splits minimize the summed squared error of the children. For 0/1 targets
//! the weighted Gini impurity of a node is exactly twice its squared error, so
//! the same search serves classification (random forest) and regression
//! (boosting). Ties are broken towards the lowest feature index, then the
//! lowest threshold.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Samples with `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

struct Builder<'a, R, F> {
    x: &'a Matrix,
    targets: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    leaf_value: F,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Fits a tree on the multiset `samples` (indices may repeat). `leaf_value`
/// maps the samples reaching a leaf to its stored value.
pub(crate) fn fit<R: Rng, F: FnMut(&[usize]) -> f64>(
    x: &Matrix,
    targets: &[f64],
    samples: Vec<usize>,
    params: TreeParams,
    rng: &mut R,
    leaf_value: F,
) -> Tree {
    let mut b = Builder {
        x,
        targets,
        params,
        rng,
        leaf_value,
        nodes: Vec::new(),
    };
    b.grow(samples, 0);
    Tree { nodes: b.nodes }
}

fn sse(count: f64, sum: f64, sumsq: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        (sumsq - sum * sum / count).max(0.0)
    }
}

impl<R: Rng, F: FnMut(&[usize]) -> f64> Builder<'_, R, F> {
    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });

        let split = if self.params.max_depth.is_some_and(|m| depth >= m)
            || samples.len() < self.params.min_samples_split
            || samples.len() < 2 * self.params.min_samples_leaf
        {
            None
        } else {
            self.best_split(&samples)
        };

        match split {
            None => {
                let value = (self.leaf_value)(&samples);
                self.nodes[id] = Node::Leaf { value };
            }
            Some(c) => {
                let (l, r): (Vec<usize>, Vec<usize>) = samples
                    .iter()
                    .partition(|&&s| self.x.get(s, c.feature) <= c.threshold);
                drop(samples);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
            }
        }
        id
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<Candidate> {
        let (n, s, ss) = samples.iter().fold((0.0, 0.0, 0.0), |(n, s, ss), &i| {
            let t = self.targets[i];
            (n + 1.0, s + t, ss + t * t)
        });
        let parent = sse(n, s, ss);
        if parent <= 0.0 {
            return None;
        }
        let d = self.x.cols();
        let k = self.params.max_features.unwrap_or(d).clamp(1, d);
        let (mut first, rest): (Vec<usize>, Vec<usize>) = if k >= d {
            ((0..d).collect(), Vec::new())
        } else {
            let mut perm: Vec<usize> = sample(self.rng, d, d).into_vec();
            let rest = perm.split_off(k);
            (perm, rest)
        };
        first.sort_unstable();

        let mut best: Option<Candidate> = None;
        let mut buf: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
        let mut found_valid = false;
        for f in first {
            found_valid |= self.scan_feature(f, samples, parent, &mut buf, &mut best);
        }
        if !found_valid {
            // keep looking past max_features until some feature is not constant
            for f in rest {
                if self.scan_feature(f, samples, parent, &mut buf, &mut best) {
                    break;
                }
            }
        }
        best.filter(|c| c.gain > 0.0)
    }

    /// Scans all thresholds of feature `f`. Returns whether any valid
    /// partition exists.
    fn scan_feature(
        &self,
        f: usize,
        samples: &[usize],
        parent: f64,
        buf: &mut Vec<(f64, f64)>,
        best: &mut Option<Candidate>,
    ) -> bool {
        buf.clear();
        buf.extend(samples.iter().map(|&i| (self.x.get(i, f), self.targets[i])));
        buf.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total_n = buf.len() as f64;
        let (total_s, total_ss) = buf
            .iter()
            .fold((0.0, 0.0), |(s, ss), &(_, t)| (s + t, ss + t * t));
        let min_leaf = self.params.min_samples_leaf;
        let mut valid = false;
        let (mut ls, mut lss) = (0.0, 0.0);
        for i in 0..buf.len() - 1 {
            let t = buf[i].1;
            ls += t;
            lss += t * t;
            let (lo, hi) = (buf[i].0, buf[i + 1].0);
            if lo == hi {
                continue;
            }
            let nl = i + 1;
            if nl < min_leaf || buf.len() - nl < min_leaf {
                continue;
            }
            valid = true;
            let ln = nl as f64;
            let child = sse(ln, ls, lss) + sse(total_n - ln, total_s - ls, total_ss - lss);
            let gain = parent - child;
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                *best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
        valid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> TreeParams {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        }
    }

    fn mean_leaf(t: &[f64]) -> impl FnMut(&[usize]) -> f64 + '_ {
        move |s| s.iter().map(|&i| t[i]).sum::<f64>() / s.len() as f64
    }

    #[test]
    fn separates_threshold_data() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = [0.0, 0.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = fit(&x, &y, (0..4).collect(), params(), &mut rng, mean_leaf(&y));
        assert_eq!(t.nodes.len(), 3);
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            _ => panic!("expected split"),
        }
        assert_eq!(t.predict(&[0.2]), 0.0);
        assert_eq!(t.predict(&[2.7]), 1.0);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both columns separate the classes equally well
        let x = Matrix::from_rows(&[[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0]]).unwrap();
        let y = [0.0, 0.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = fit(&x, &y, (0..4).collect(), params(), &mut rng, mean_leaf(&y));
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_limit_respected() {
        let rows: Vec<[f64; 1]> = (0..64).map(|i| [i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..64).map(|i| ((i / 3) % 2) as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = params();
        p.max_depth = Some(3);
        let t = fit(&x, &y, (0..64).collect(), p, &mut rng, mean_leaf(&y));
        assert!(t.depth() <= 3);
        assert!(t.leaf_count() <= 8);
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let y = [0.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = fit(&x, &y, (0..3).collect(), params(), &mut rng, mean_leaf(&y));
        assert_eq!(t.nodes, vec![Node::Leaf { value: 2.0 / 3.0 }]);
    }
}
