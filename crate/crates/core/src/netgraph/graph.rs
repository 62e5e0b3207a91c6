use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::integrate::KnnStructure;
use crate::simkern::{Orientation, SimilarityMatrix};
use crate::Scalar;

/// Undirected weighted simple graph; statistics use the unweighted skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    n_nodes: usize,
    edges: Vec<(usize, usize, T)>,
    adjacency: Vec<Vec<usize>>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph from `(u, v, w)` edges; rejects self-loops, duplicates
    /// and non-positive weights. Endpoints are normalised to `u < v`.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let mut unique = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n_nodes || v >= n_nodes {
                return invalid(format!("edge ({u}, {v}) outside {n_nodes} nodes"));
            }
            if u == v {
                return invalid(format!("self-loop on node {u}"));
            }
            if !(w > T::zero()) {
                return invalid(format!("edge ({u}, {v}) has non-positive weight"));
            }
            if unique.insert((u.min(v), u.max(v)), w).is_some() {
                return invalid(format!("duplicate edge ({u}, {v})"));
            }
        }
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(u, v) in unique.keys() {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Ok(Self {
            n_nodes,
            edges: unique.into_iter().map(|((u, v), w)| (u, v, w)).collect(),
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    /// Sorted neighbours of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }
}

/// Undirected union of every node's `k` closest entries.
///
/// Affinity-oriented matrices weight edges by the fused similarity (clamped to
/// the smallest positive normal); distance-oriented ones give unit weights.
pub fn knn_graph<T: Scalar>(p: &SimilarityMatrix<T>, k: usize) -> Result<Graph<T>> {
    if !p.is_total() {
        return invalid("KNN graph needs a fully defined matrix");
    }
    let n = p.n();
    if n <= k {
        return invalid(format!("KNN graph needs more than {k} nodes, got {n}"));
    }
    let knn = KnnStructure::build(p, k)?;
    let mut edges = BTreeMap::new();
    for u in 0..n {
        for &v in knn.neighbors(u) {
            let w = match p.orientation() {
                Orientation::Distance => T::one(),
                Orientation::Affinity => {
                    let a = p.get(u.min(v), u.max(v));
                    if a > T::zero() {
                        a
                    } else {
                        T::min_positive_value()
                    }
                }
            };
            edges.entry((u.min(v), u.max(v))).or_insert(w);
        }
    }
    Graph::from_edges(n, edges.into_iter().map(|((u, v), w)| (u, v, w)))
}
