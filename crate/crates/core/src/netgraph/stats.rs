use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{invalid, Result};
use crate::Scalar;

fn check_labels<T: Scalar>(g: &Graph<T>, labels: &[usize]) -> Result<()> {
    if labels.len() != g.n_nodes() {
        return invalid(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.n_nodes()
        ));
    }
    Ok(())
}

/// Newman modularity with resolution `gamma` on the unweighted skeleton.
pub fn modularity<T: Scalar>(g: &Graph<T>, labels: &[usize], gamma: f64) -> Result<f64> {
    check_labels(g, labels)?;
    let m = g.n_edges() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    let k = labels.iter().max().map_or(0, |&x| x + 1);
    let mut internal = vec![0.0; k];
    let mut degree_sum = vec![0.0; k];
    for &(u, v, _) in g.edges() {
        if labels[u] == labels[v] {
            internal[labels[u]] += 1.0;
        }
    }
    for (node, &c) in labels.iter().enumerate() {
        degree_sum[c] += g.degree(node) as f64;
    }
    Ok(internal
        .iter()
        .zip(&degree_sum)
        .map(|(&l, &d)| l / m - gamma * (d / (2.0 * m)).powi(2))
        .sum())
}

/// Triad participation ratio averaged over clusters: the fraction of each
/// cluster's nodes lying on a triangle whose three nodes share the cluster.
pub fn tpr<T: Scalar>(g: &Graph<T>, labels: &[usize]) -> Result<f64> {
    check_labels(g, labels)?;
    let k = labels.iter().max().map_or(0, |&x| x + 1);
    if k == 0 {
        return Ok(0.0);
    }
    let in_triad: Vec<bool> = (0..g.n_nodes())
        .into_par_iter()
        .map(|u| {
            let same: Vec<usize> = g
                .neighbors(u)
                .iter()
                .copied()
                .filter(|&v| labels[v] == labels[u])
                .collect();
            same.iter().enumerate().any(|(a, &v)| {
                same[a + 1..].iter().any(|&w| g.has_edge(v, w))
            })
        })
        .collect();
    let mut size = vec![0usize; k];
    let mut hits = vec![0usize; k];
    for (u, &c) in labels.iter().enumerate() {
        size[c] += 1;
        hits[c] += in_triad[u] as usize;
    }
    let used: Vec<f64> = size
        .iter()
        .zip(&hits)
        .filter(|(&s, _)| s > 0)
        .map(|(&s, &h)| h as f64 / s as f64)
        .collect();
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}

/// Degree assortativity: Pearson correlation of endpoint degrees over both
/// orientations of every edge. `None` when undefined (no edges or constant
/// endpoint degrees).
pub fn assortativity<T: Scalar>(g: &Graph<T>) -> Option<f64> {
    if g.n_edges() == 0 {
        return None;
    }
    let deg = g.degrees();
    let (mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for &(u, v, _) in g.edges() {
        let (a, b) = (deg[u] as f64, deg[v] as f64);
        sx += a + b;
        sxx += a * a + b * b;
        sxy += 2.0 * a * b;
    }
    let cnt = 2.0 * g.n_edges() as f64;
    let mean = sx / cnt;
    let var = sxx / cnt - mean * mean;
    if var <= 1e-12 * mean.max(1.0).powi(2) {
        return None;
    }
    Some(((sxy / cnt - mean * mean) / var).clamp(-1.0, 1.0))
}

/// Mean hop count over ordered pairs of distinct, mutually reachable nodes.
/// `None` when no such pair exists.
pub fn mean_path_length<T: Scalar>(g: &Graph<T>) -> Option<f64> {
    let n = g.n_nodes();
    let (total, pairs) = (0..n)
        .into_par_iter()
        .map(|src| {
            let mut dist = vec![usize::MAX; n];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            let (mut sum, mut cnt) = (0u64, 0u64);
            while let Some(u) = queue.pop_front() {
                for &v in g.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        sum += dist[v] as u64;
                        cnt += 1;
                        queue.push_back(v);
                    }
                }
            }
            (sum, cnt)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    (pairs > 0).then(|| total as f64 / pairs as f64)
}

/// Mean and median node degree (median of an even count averages the middle two).
pub fn degree_stats<T: Scalar>(g: &Graph<T>) -> (f64, f64) {
    let mut deg = g.degrees();
    if deg.is_empty() {
        return (0.0, 0.0);
    }
    let n = deg.len();
    let mean = deg.iter().sum::<usize>() as f64 / n as f64;
    deg.sort_unstable();
    let median = if n % 2 == 1 {
        deg[n / 2] as f64
    } else {
        (deg[n / 2 - 1] + deg[n / 2]) as f64 / 2.0
    };
    (mean, median)
}

/// All network statistics of one graph, as exported next to its edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub modularity: Option<f64>,
    pub tpr: Option<f64>,
    pub assortativity: Option<f64>,
    pub mean_path_length: Option<f64>,
    pub mean_degree: f64,
    pub median_degree: f64,
    pub min_degree: usize,
}

/// Computes every statistic; label-based ones only when `labels` is given.
pub fn graph_stats<T: Scalar>(g: &Graph<T>, labels: Option<&[usize]>) -> Result<GraphStats> {
    let (mean_degree, median_degree) = degree_stats(g);
    Ok(GraphStats {
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        modularity: labels.map(|l| modularity(g, l, 1.0)).transpose()?,
        tpr: labels.map(|l| tpr(g, l)).transpose()?,
        assortativity: assortativity(g),
        mean_path_length: mean_path_length(g),
        mean_degree,
        median_degree,
        min_degree: g.degrees().into_iter().min().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph<f64> {
        Graph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
    }

    fn two_triangles() -> Graph<f64> {
        graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    }

    // Direct double sum over all node pairs.
    fn modularity_oracle(g: &Graph<f64>, labels: &[usize], gamma: f64) -> f64 {
        let n = g.n_nodes();
        let m = g.n_edges() as f64;
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    let a = if g.has_edge(i, j) { 1.0 } else { 0.0 };
                    q += a - gamma * g.degree(i) as f64 * g.degree(j) as f64 / (2.0 * m);
                }
            }
        }
        q / (2.0 * m)
    }

    // Enumerate triangles explicitly per node.
    fn tpr_oracle(g: &Graph<f64>, labels: &[usize]) -> f64 {
        let n = g.n_nodes();
        let k = labels.iter().max().unwrap() + 1;
        let mut per = vec![(0usize, 0usize); k];
        for u in 0..n {
            let mut hit = false;
            for v in 0..n {
                for w in 0..n {
                    if v != w
                        && labels[v] == labels[u]
                        && labels[w] == labels[u]
                        && g.has_edge(u, v)
                        && g.has_edge(u, w)
                        && g.has_edge(v, w)
                    {
                        hit = true;
                    }
                }
            }
            per[labels[u]].0 += 1;
            per[labels[u]].1 += hit as usize;
        }
        let used: Vec<f64> = per.iter().filter(|p| p.0 > 0).map(|p| p.1 as f64 / p.0 as f64).collect();
        used.iter().sum::<f64>() / used.len() as f64
    }

    #[test]
    fn modularity_hand_values() {
        let g = two_triangles();
        assert!((modularity(&g, &[0, 0, 0, 1, 1, 1], 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(modularity(&g, &[0; 6], 1.0).unwrap().abs() < 1e-15);
        assert_eq!(modularity(&graph(3, &[]), &[0, 1, 2], 1.0).unwrap(), 0.0);
        assert!(modularity(&g, &[0; 5], 1.0).is_err());
    }

    #[test]
    fn tpr_hand_values() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tpr(&tri, &[0, 0, 0]).unwrap(), 1.0);
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(tpr(&path, &[0, 0, 0]).unwrap(), 0.0);
        let mixed = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)]);
        assert_eq!(tpr(&mixed, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.5);
        // Triangle spanning two clusters counts for neither.
        assert_eq!(tpr(&tri, &[0, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn assortativity_cases() {
        let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        assert!((assortativity(&star).unwrap() + 1.0).abs() < 1e-12);
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(assortativity(&k4), None);
        assert_eq!(assortativity(&graph(4, &[(0, 1), (2, 3)])), None);
    }

    #[test]
    fn path_lengths() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(mean_path_length(&tri), Some(1.0));
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert!((mean_path_length(&path).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_path_length(&graph(4, &[(0, 1), (2, 3)])), Some(1.0));
        assert_eq!(mean_path_length(&graph(3, &[])), None);
    }

    #[test]
    fn degree_summaries() {
        assert_eq!(degree_stats(&graph(3, &[(0, 1), (1, 2), (0, 2)])), (2.0, 2.0));
        assert_eq!(degree_stats(&graph(4, &[(0, 1), (0, 2), (0, 3)])), (1.5, 1.0));
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(degree_stats(&k4), (3.0, 3.0));
    }

    fn random_graph(n: usize) -> impl Strategy<Value = (Graph<f64>, Vec<usize>)> {
        (
            proptest::collection::vec(proptest::bool::weighted(0.3), n * (n - 1) / 2),
            proptest::collection::vec(0usize..4, n),
        )
            .prop_map(move |(bits, labels)| {
                let mut edges = Vec::new();
                let mut idx = 0;
                for u in 0..n {
                    for v in (u + 1)..n {
                        if bits[idx] {
                            edges.push((u, v, 1.0));
                        }
                        idx += 1;
                    }
                }
                (Graph::from_edges(n, edges).unwrap(), labels)
            })
    }

    proptest! {
        #[test]
        fn modularity_matches_oracle((g, labels) in random_graph(30), gamma in 0.2f64..2.0) {
            prop_assume!(g.n_edges() > 0);
            let q = modularity(&g, &labels, gamma).unwrap();
            prop_assert!((q - modularity_oracle(&g, &labels, gamma)).abs() < 1e-10);
            if gamma == 1.0 { prop_assert!((-1.0..=1.0).contains(&q)); }
        }

        #[test]
        fn tpr_matches_oracle((g, labels) in random_graph(20)) {
            prop_assert!((tpr(&g, &labels).unwrap() - tpr_oracle(&g, &labels)).abs() < 1e-10);
        }

        #[test]
        fn stats_invariant_under_relabeling((g, labels) in random_graph(15), shift in 1usize..15) {
            let n = g.n_nodes();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let h = Graph::from_edges(n, g.edges().iter().map(|&(u, v, w)| (perm[u], perm[v], w))).unwrap();
            let mut relabeled = vec![0; n];
            for i in 0..n {
                relabeled[perm[i]] = labels[i];
            }
            let a = graph_stats(&g, Some(&labels)).unwrap();
            let b = graph_stats(&h, Some(&relabeled)).unwrap();
            let close = |x: Option<f64>, y: Option<f64>| match (x, y) {
                (Some(p), Some(q)) => (p - q).abs() < 1e-12,
                (None, None) => true,
                _ => false,
            };
            prop_assert!(close(a.modularity, b.modularity));
            prop_assert!(close(a.tpr, b.tpr));
            prop_assert!(close(a.assortativity, b.assortativity));
            prop_assert!(close(a.mean_path_length, b.mean_path_length));
            prop_assert_eq!(a.mean_degree, b.mean_degree);
            prop_assert_eq!(a.median_degree, b.median_degree);
        }
    }
}
