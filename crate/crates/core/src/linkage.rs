//! Complete-linkage agglomerative clustering and flat cuts of the tree.

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;

/// One agglomeration step. Node ids are 1-based: leaves are `1..=n`, the
/// cluster formed by merge `s` (0-based) is `n + 1 + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Number of leaves.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }
}

/// Flat partition of `n` observations into `k` non-empty clusters.
///
/// Clusters are indexed `0..k` internally; [`ClusterAssignment::labels`]
/// returns the 1-based labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterAssignment {
    clusters: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    /// Builds an assignment from 0-based cluster indices. Every index in
    /// `0..k` must occur at least once.
    pub fn from_indices(clusters: Vec<usize>) -> Result<Self> {
        let k = clusters.iter().max().map_or(0, |m| m + 1);
        if k == 0 {
            return Err(Error::invalid("assignment must cover at least one observation"));
        }
        let mut seen = vec![false; k];
        for &c in &clusters {
            seen[c] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("cluster {} is empty", empty + 1)));
        }
        Ok(ClusterAssignment { clusters, k })
    }

    /// Builds an assignment from 1-based labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::invalid("labels are 1-based; found 0"));
        }
        Self::from_indices(labels.iter().map(|l| l - 1).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.clusters.len()
    }

    /// 0-based cluster index of observation `i`.
    #[inline]
    pub fn cluster_of(&self, i: usize) -> usize {
        self.clusters[i]
    }

    pub fn indices(&self) -> &[usize] {
        &self.clusters
    }

    pub fn labels(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c + 1).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.clusters {
            sizes[c] += 1;
        }
        sizes
    }

    /// Observation indices of each cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &c) in self.clusters.iter().enumerate() {
            members[c].push(i);
        }
        members
    }
}

/// Complete-linkage agglomeration over squared distances.
///
/// At each step the pair of active clusters with the smallest maximum
/// inter-point distance is merged. Ties go to the pair whose smallest member
/// indices `(a, b)`, `a < b`, are lexicographically smallest.
pub fn complete_linkage(dm: &DistanceMatrix) -> Result<Dendrogram> {
    let n = dm.n();
    if n < 2 {
        return Err(Error::invalid(format!(
            "complete linkage needs at least two observations, got {n}"
        )));
    }
    let mut dist: Vec<f64> = dm.squared().iter().copied().collect();
    let mut active = vec![true; n];
    let mut node = (1..=n).collect::<Vec<_>>();
    let mut size = vec![1usize; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    // Nearest active partner with a larger row index; smallest index on ties.
    let refresh = |row: usize, dist: &[f64], active: &[bool], nn: &mut [usize], nn_dist: &mut [f64]| {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for col in (row + 1)..n {
            if active[col] {
                let d = dist[row * n + col];
                if d < best_d {
                    best_d = d;
                    best = col;
                }
            }
        }
        nn[row] = best;
        nn_dist[row] = best_d;
    };
    for row in 0..n {
        refresh(row, &dist, &active, &mut nn, &mut nn_dist);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..(n - 1) {
        let mut a = usize::MAX;
        let mut best = f64::INFINITY;
        for row in 0..n {
            if active[row] && nn[row] != usize::MAX && (a == usize::MAX || nn_dist[row] < best) {
                a = row;
                best = nn_dist[row];
            }
        }
        let b = nn[a];
        merges.push(Merge {
            left: node[a],
            right: node[b],
            height: best,
            size: size[a] + size[b],
        });

        for x in 0..n {
            if active[x] && x != a && x != b {
                let d = dist[a * n + x].max(dist[b * n + x]);
                dist[a * n + x] = d;
                dist[x * n + a] = d;
            }
        }
        active[b] = false;
        size[a] += size[b];
        node[a] = n + 1 + step;

        for x in 0..n {
            if active[x] && (x == a || nn[x] == a || nn[x] == b) {
                refresh(x, &dist, &active, &mut nn, &mut nn_dist);
            }
        }
    }
    Ok(Dendrogram { n, merges })
}

/// Cuts the tree into `k` clusters by undoing its last `k - 1` merges.
/// Clusters are numbered in order of their smallest member index.
pub fn cut(tree: &Dendrogram, k: usize) -> Result<ClusterAssignment> {
    let n = tree.n;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot cut {n} observations into {k} clusters")));
    }
    let mut parent: Vec<usize> = (0..(2 * n - 1)).collect();
    for (step, m) in tree.merges[..(n - k)].iter().enumerate() {
        let joined = n + step;
        parent[m.left - 1] = joined;
        parent[m.right - 1] = joined;
    }
    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let mut label_of_root = std::collections::HashMap::with_capacity(k);
    let clusters = (0..n)
        .map(|i| {
            let next = label_of_root.len();
            *label_of_root.entry(root(i)).or_insert(next)
        })
        .collect();
    Ok(ClusterAssignment { clusters, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{squared_distance_matrix, Dataset};
    use ndarray::array;

    fn line(points: &[f64]) -> DistanceMatrix {
        squared_distance_matrix(&Dataset::from_rows(&points.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap())
    }

    #[test]
    fn four_point_line_trace() {
        let tree = complete_linkage(&line(&[0.0, 1.0, 10.0, 11.0])).unwrap();
        let m = tree.merges();
        assert_eq!((m[0].left, m[0].right, m[0].height), (1, 2, 1.0));
        assert_eq!((m[1].left, m[1].right, m[1].height), (3, 4, 1.0));
        assert_eq!((m[2].left, m[2].right, m[2].height), (5, 6, 121.0));
        assert_eq!(m[2].size, 4);

        assert_eq!(cut(&tree, 2).unwrap().labels(), vec![1, 1, 2, 2]);
        assert_eq!(cut(&tree, 1).unwrap().labels(), vec![1, 1, 1, 1]);
        assert_eq!(cut(&tree, 4).unwrap().labels(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn equidistant_points_merge_lowest_pair_first() {
        let s = 3.0_f64.sqrt() / 2.0;
        let data = Dataset::new(array![[0.0, 0.0], [1.0, 0.0], [0.5, s]]).unwrap();
        let mut dm = squared_distance_matrix(&data).squared().to_owned();
        // Force exact equality.
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    dm[[i, j]] = 1.0;
                }
            }
        }
        let tree = complete_linkage(&DistanceMatrix::from_squared(dm).unwrap()).unwrap();
        assert_eq!((tree.merges()[0].left, tree.merges()[0].right), (1, 2));
        assert_eq!(tree.merges()[1].height, 1.0);
    }

    #[test]
    fn two_points() {
        let tree = complete_linkage(&line(&[2.0, 5.0])).unwrap();
        assert_eq!(tree.merges().len(), 1);
        assert_eq!(tree.merges()[0].height, 9.0);
    }

    #[test]
    fn rejects_single_point() {
        assert!(complete_linkage(&line(&[1.0])).is_err());
    }

    #[test]
    fn cut_out_of_range() {
        let tree = complete_linkage(&line(&[0.0, 1.0, 3.0])).unwrap();
        assert!(cut(&tree, 0).is_err());
        assert!(cut(&tree, 4).is_err());
    }

    #[test]
    fn assignment_constructors() {
        assert!(ClusterAssignment::from_labels(&[1, 3, 3]).is_err());
        assert!(ClusterAssignment::from_labels(&[0, 1]).is_err());
        let a = ClusterAssignment::from_labels(&[2, 1, 2]).unwrap();
        assert_eq!(a.k(), 2);
        assert_eq!(a.sizes(), vec![1, 2]);
        assert_eq!(a.members(), vec![vec![1], vec![0, 2]]);
    }
}
