/// Disjoint sets with path compression and union by rank.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    /// Smallest vertex index in each component, valid at roots.
    oldest: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            oldest: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Smallest vertex of the component containing `x`.
    pub fn oldest(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.oldest[r]
    }

    /// Merges the components of `a` and `b`. Returns `None` if they already
    /// coincide, otherwise the oldest vertex of the component that was
    /// absorbed (the younger one).
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (oa, ob) = (self.oldest[ra], self.oldest[rb]);
        let (elder, younger) = if oa < ob { (oa, ob) } else { (ob, oa) };
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] = self.rank[hi].saturating_add(1);
        }
        self.oldest[hi] = elder;
        Some(younger)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_reports_younger_component() {
        let mut uf = UnionFind::new(5);
        assert_eq!(uf.union(3, 4), Some(4));
        assert_eq!(uf.union(4, 1), Some(3));
        assert_eq!(uf.union(1, 3), None);
        assert_eq!(uf.oldest(4), 1);
        assert_eq!(uf.union(0, 2), Some(2));
        assert_eq!(uf.union(4, 2), Some(1));
        assert_eq!(uf.oldest(3), 0);
    }
}
