//! Similarity graphs over points and agents.
//!
//! [`knn_weights`] builds the fixed Gaussian-weighted k-nearest-neighbour
//! graph that the optimizer uses, and [`threshold_graph`] plus
//! [`connected_components`] turn converged agents into clusters.

use std::io;

use crate::dataset::{squared_distance, DataMatrix};
use crate::error::{Error, Result};

/// Sparse symmetric weighted graph; each unordered pair is stored once as
/// `(i, j, w)` with `i < j`, sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Debug dump of the edge list as "i j w" lines.
    pub fn write_edge_list(&self, out: &mut impl io::Write) -> io::Result<()> {
        for &(i, j, w) in &self.edges {
            writeln!(out, "{i} {j} {w}")?;
        }
        Ok(())
    }
}

/// Simple unweighted graph on `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl AdjacencyGraph {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Self {
        for e in &mut edges {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.retain(|&(i, j)| i != j);
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Build the union-symmetrized k-NN graph with Gaussian weights
/// `exp(-phi * ||x_i - x_j||^2)`.
///
/// An edge `(i, j)` exists when either point is among the `k` nearest
/// neighbours of the other; distance ties break towards the smaller index.
/// The neighbour search is exact, so the output is deterministic.
pub fn knn_weights(x: &DataMatrix, k: usize, phi: f64) -> Result<WeightedGraph> {
    let n = x.n_rows();
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidParam(format!(
            "k must be in 1..={} for {n} points, got {k}",
            n - 1
        )));
    }
    assert!(
        phi >= 0.0 && phi.is_finite(),
        "phi must be finite and non-negative"
    );

    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * k);
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        for j in 0..n {
            if j != i {
                dists.push((squared_distance(x.row(i), x.row(j)), j));
            }
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, cmp);
            dists.truncate(k);
        }
        for &(_, j) in dists.iter() {
            pairs.push((i.min(j), i.max(j)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            // Very far pairs underflow exp to 0; clamp to keep the
            // positive-weight invariant without affecting any sum.
            let w = (-phi * squared_distance(x.row(i), x.row(j)))
                .exp()
                .max(f64::MIN_POSITIVE);
            (i, j, w)
        })
        .collect();
    Ok(WeightedGraph { n, edges })
}

/// Link agents strictly closer than `eta1` in Euclidean distance.
pub fn threshold_graph(u: &DataMatrix, eta1: f64) -> AdjacencyGraph {
    assert!(eta1 > 0.0, "eta1 must be positive");
    let n = u.n_rows();
    let limit = eta1 * eta1;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if squared_distance(u.row(i), u.row(j)) < limit {
                edges.push((i, j));
            }
        }
    }
    AdjacencyGraph { n, edges }
}

/// Assign component ids 0..C-1 in order of each component's smallest member.
pub fn connected_components(g: &AdjacencyGraph) -> Vec<usize> {
    let mut uf = UnionFind::new(g.n);
    for &(i, j) in &g.edges {
        uf.union(i, j);
    }
    let mut ids = vec![usize::MAX; g.n];
    let mut next = 0;
    for node in 0..g.n {
        let root = uf.find(node);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        ids[node] = ids[root];
    }
    ids
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}
