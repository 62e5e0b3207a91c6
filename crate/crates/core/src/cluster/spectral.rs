use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use super::{kmeans, ClusterParams};
use crate::error::{invalid, Error, Result};
use crate::netgraph::Graph;
use crate::{Labels, Scalar};

/// Eigenvalues (ascending) and matching eigenvectors (columns) of the
/// random-walk Laplacian `I - D^-1 A` of the unweighted skeleton.
///
/// Solved through the symmetric normalised Laplacian and mapped back by
/// `D^-1/2`.
pub fn rw_eigen<T: Scalar>(g: &Graph<T>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = g.n_nodes();
    if let Some(v) = (0..n).find(|&v| g.degree(v) == 0) {
        return invalid(format!("node {v} is isolated"));
    }
    let inv_sqrt: Vec<f64> = g.degrees().iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut l = DMatrix::<f64>::identity(n, n);
    for &(u, v, _) in g.edges() {
        let x = -inv_sqrt[u] * inv_sqrt[v];
        l[(u, v)] = x;
        l[(v, u)] = x;
    }
    let eig = SymmetricEigen::try_new(l, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure(format!("symmetric eigensolver did not converge (n = {n})")))?;
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure(format!("non-finite eigenvalue (n = {n})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])] * inv_sqrt[r]);
    Ok((values, vectors))
}

/// k-means on the `k` leading random-walk Laplacian eigenvectors.
pub fn spectral_rw<T: Scalar>(g: &Graph<T>, k: usize, params: &ClusterParams) -> Result<Labels> {
    let n = g.n_nodes();
    if k == 0 || k > n {
        return invalid(format!("cannot form {k} clusters from {n} nodes"));
    }
    let (_, vectors) = rw_eigen(g)?;
    let embedding = vectors.slice(ndarray::s![.., ..k]).to_owned();
    let raw = kmeans(&embedding, k, params.n_restarts, params.seed)?;
    Ok(Labels::compact(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalmetrics::ari;
    use crate::mmgen::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph<f64> {
        Graph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
    }

    fn clique_edges(nodes: std::ops::Range<usize>) -> Vec<(usize, usize)> {
        let v: Vec<usize> = nodes.collect();
        let mut e = Vec::new();
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[i + 1..] {
                e.push((a, b));
            }
        }
        e
    }

    fn components(g: &Graph<f64>) -> usize {
        let n = g.n_nodes();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in g.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    fn ncut(g: &Graph<f64>, side: &[bool]) -> f64 {
        let cut = g.edges().iter().filter(|e| side[e.0] != side[e.1]).count() as f64;
        let vol = |s: bool| -> f64 { (0..g.n_nodes()).filter(|&v| side[v] == s).map(|v| g.degree(v) as f64).sum() };
        cut / vol(true) + cut / vol(false)
    }

    #[test]
    fn two_triangles_nullspace() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let (values, vectors) = rw_eigen(&g).unwrap();
        assert!(values[0].abs() < 1e-10 && values[1].abs() < 1e-10 && values[2] > 0.5);
        // L_rw v = v - D^-1 A v vanishes for the two leading vectors.
        for c in 0..2 {
            for u in 0..6 {
                let avg: f64 = g.neighbors(u).iter().map(|&v| vectors[[v, c]]).sum::<f64>() / 2.0;
                assert!((vectors[[u, c]] - avg).abs() < 1e-10);
            }
        }
        let l = spectral_rw(&g, 2, &ClusterParams::default()).unwrap();
        assert_eq!(ari(l.as_slice(), &[0, 0, 0, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn complete_graph_single_cluster() {
        let g = graph(5, &clique_edges(0..5));
        assert_eq!(spectral_rw(&g, 1, &ClusterParams::default()).unwrap().n_clusters(), 1);
    }

    #[test]
    fn joined_cliques_match_min_ncut() {
        let mut edges = clique_edges(0..6);
        edges.extend(clique_edges(6..12));
        edges.push((5, 6));
        let g = graph(12, &edges);
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << 11) {
            let side: Vec<bool> = (0..12).map(|v| v < 11 && mask >> v & 1 == 1).collect();
            let c = ncut(&g, &side);
            if c < best.0 {
                best = (c, mask);
            }
        }
        let side: Vec<usize> = (0..12).map(|v| (v < 11 && best.1 >> v & 1 == 1) as usize).collect();
        let l = spectral_rw(&g, 2, &ClusterParams::default()).unwrap();
        assert_eq!(ari(l.as_slice(), &side).unwrap(), 1.0);
        assert_eq!(ari(l.as_slice(), &[0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn isolated_node_rejected() {
        let g = graph(3, &[(0, 1)]);
        assert!(matches!(rw_eigen(&g), Err(Error::InvalidArgument(_))));
        assert!(spectral_rw(&g, 2, &ClusterParams::default()).is_err());
    }

    #[test]
    fn relabeling_invariance() {
        let mut edges = clique_edges(0..5);
        edges.extend(clique_edges(5..10));
        edges.extend(clique_edges(10..15));
        edges.extend([(4, 5), (9, 10)]);
        let g = graph(15, &edges);
        let perm: Vec<usize> = (0..15).map(|i| (i * 7 + 3) % 15).collect();
        let h = Graph::from_edges(15, g.edges().iter().map(|&(u, v, w)| (perm[u], perm[v], w))).unwrap();
        let p = ClusterParams::default();
        let a = spectral_rw(&g, 3, &p).unwrap();
        let b = spectral_rw(&h, 3, &p).unwrap();
        let back: Vec<usize> = (0..15).map(|i| b.get(perm[i])).collect();
        assert_eq!(ari(a.as_slice(), &back).unwrap(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn spectrum_bounds_and_components(seed in 0u64..1000, parts in 1usize..4) {
            // Union of `parts` random connected blocks.
            let mut rng = seeded_rng(seed, 5);
            let mut edges = Vec::new();
            let mut offset = 0;
            for _ in 0..parts {
                let size = rng.random_range(3..10);
                for v in 1..size {
                    edges.push((offset + rng.random_range(0..v), offset + v));
                }
                for u in 0..size {
                    for v in (u + 1)..size {
                        if rng.random::<f64>() < 0.3 {
                            edges.push((offset + u, offset + v));
                        }
                    }
                }
                offset += size;
            }
            edges.sort_unstable();
            edges.dedup();
            let g = graph(offset, &edges);
            let (values, _) = rw_eigen(&g).unwrap();
            prop_assert!(values.iter().all(|&x| x > -1e-10 && x < 2.0 + 1e-10));
            let zeros = values.iter().filter(|x| x.abs() < 1e-8).count();
            prop_assert_eq!(zeros, components(&g));
            prop_assert_eq!(zeros, parts);
        }
    }
}
