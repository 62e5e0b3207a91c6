use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ClusterParams;
use crate::error::Result;
use crate::evalmetrics::ami;
use crate::mmgen::seeded_rng;
use crate::netgraph::Graph;
use crate::{Labels, Scalar};

const GAIN_EPS: f64 = 1e-10;
const THETA: f64 = 0.01;

// Aggregated multigraph: node strength is the summed original degree.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
}

impl Level {
    fn base<T: Scalar>(g: &Graph<T>) -> Self {
        let adj = (0..g.n_nodes())
            .map(|u| g.neighbors(u).iter().map(|&v| (v, 1.0)).collect())
            .collect();
        let strength = g.degrees().into_iter().map(|d| d as f64).collect();
        Self { adj, strength }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    fn aggregate(&self, refined: &[usize], n_groups: usize) -> Self {
        let mut strength = vec![0.0; n_groups];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_groups];
        for u in 0..self.n() {
            strength[refined[u]] += self.strength[u];
            for &(v, w) in &self.adj[u] {
                let (a, b) = (refined[u], refined[v]);
                if a != b {
                    rows[a].push((b, w));
                }
            }
        }
        let adj = rows
            .into_iter()
            .map(|mut row| {
                row.sort_unstable_by_key(|e| e.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                for (v, w) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == v => last.1 += w,
                        _ => merged.push((v, w)),
                    }
                }
                merged
            })
            .collect();
        Self { adj, strength }
    }
}

// Scratch accumulator of edge weight from one node to each community.
struct Links {
    weight: Vec<f64>,
    touched: Vec<usize>,
}

impl Links {
    fn new(n: usize) -> Self {
        Self {
            weight: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    fn gather(&mut self, adj: &[(usize, f64)], group: impl Fn(usize) -> Option<usize>) {
        for &(v, w) in adj {
            if let Some(c) = group(v) {
                if self.weight[c] == 0.0 {
                    self.touched.push(c);
                }
                self.weight[c] += w;
            }
        }
    }

    fn clear(&mut self) {
        for &c in &self.touched {
            self.weight[c] = 0.0;
        }
        self.touched.clear();
    }
}

// Queue-based local moving; returns whether any node changed community.
fn move_nodes(level: &Level, comm: &mut [usize], gamma: f64, two_m: f64, rng: &mut ChaCha8Rng) -> bool {
    let n = level.n();
    let mut total = vec![0.0; n];
    let mut size = vec![0usize; n];
    for u in 0..n {
        total[comm[u]] += level.strength[u];
        size[comm[u]] += 1;
    }
    let mut empty: Vec<usize> = (0..n).filter(|&c| size[c] == 0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queued = vec![true; n];
    let mut queue: VecDeque<usize> = order.into();
    let mut links = Links::new(n);
    let mut changed = false;
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        let cur = comm[v];
        let kv = level.strength[v];
        total[cur] -= kv;
        size[cur] -= 1;
        links.gather(&level.adj[v], |u| (u != v).then(|| comm[u]));
        let gain = |c: usize, w: f64| w - gamma * kv * total[c] / two_m;
        let mut best = cur;
        let mut best_gain = gain(cur, links.weight[cur]);
        for &c in &links.touched {
            let g = gain(c, links.weight[c]);
            if g > best_gain + GAIN_EPS {
                best = c;
                best_gain = g;
            }
        }
        if best_gain < -GAIN_EPS && size[cur] > 0 {
            best = empty.pop().unwrap_or(cur);
        }
        links.clear();
        if size[cur] == 0 && best != cur {
            empty.push(cur);
        }
        total[best] += kv;
        size[best] += 1;
        comm[v] = best;
        if best != cur {
            changed = true;
            for &(u, _) in &level.adj[v] {
                if !queued[u] && comm[u] != best {
                    queued[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    changed
}

// Splits every community into well-connected sub-communities by randomized
// greedy merging of singletons. Returns compact refined ids and their count.
fn refine(level: &Level, comm: &[usize], gamma: f64, two_m: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize) {
    let n = level.n();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut comm_total = vec![0.0; n];
    for u in 0..n {
        members[comm[u]].push(u);
        comm_total[comm[u]] += level.strength[u];
    }
    let mut refined: Vec<usize> = (0..n).collect();
    let mut total = level.strength.clone();
    let mut size = vec![1usize; n];
    // Edge weight from each refined community to the rest of its parent.
    let mut external: Vec<f64> = (0..n)
        .map(|u| {
            level.adj[u]
                .iter()
                .filter(|&&(v, _)| v != u && comm[v] == comm[u])
                .map(|e| e.1)
                .sum()
        })
        .collect();
    let mut links = Links::new(n);
    let mut weights = Vec::new();
    for group in members.iter_mut().filter(|m| m.len() > 1) {
        group.shuffle(rng);
        let kc = comm_total[comm[group[0]]];
        for &v in group.iter() {
            let kv = level.strength[v];
            if size[refined[v]] != 1 || external[v] < gamma * kv * (kc - kv) / two_m {
                continue;
            }
            links.gather(&level.adj[v], |u| (u != v && comm[u] == comm[v]).then(|| refined[u]));
            let mut candidates = vec![(v, 0.0)];
            for &s in &links.touched {
                if external[s] >= gamma * total[s] * (kc - total[s]) / two_m {
                    let g = links.weight[s] - gamma * kv * total[s] / two_m;
                    if g >= 0.0 {
                        candidates.push((s, g));
                    }
                }
            }
            let top = candidates.iter().map(|c| c.1).fold(f64::MIN, f64::max);
            weights.clear();
            weights.extend(candidates.iter().map(|c| ((c.1 - top) / THETA).exp()));
            let mut pick = rng.random::<f64>() * weights.iter().sum::<f64>();
            let mut chosen = candidates[candidates.len() - 1];
            for (c, &w) in candidates.iter().zip(&weights) {
                if pick < w {
                    chosen = *c;
                    break;
                }
                pick -= w;
            }
            let target = chosen.0;
            if target != v {
                let w_vs = links.weight[target];
                external[target] += external[v] - 2.0 * w_vs;
                total[target] += kv;
                size[target] += 1;
                size[v] = 0;
                refined[v] = target;
            }
            links.clear();
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    for r in refined.iter_mut() {
        if ids[*r] == usize::MAX {
            ids[*r] = next;
            next += 1;
        }
        *r = ids[*r];
    }
    (refined, next)
}

fn distinct(comm: &[usize]) -> usize {
    let mut seen = vec![false; comm.len()];
    comm.iter().filter(|&&c| !std::mem::replace(&mut seen[c], true)).count()
}

/// Leiden modularity maximisation on the unweighted skeleton, starting from
/// `initial` (raw ids below `n`). The result is node-optimal: no single node
/// move raises modularity at resolution `gamma`.
pub fn leiden_from<T: Scalar>(g: &Graph<T>, gamma: f64, seed: u64, initial: &[usize]) -> Result<Labels> {
    let n = g.n_nodes();
    if initial.len() != n || initial.iter().any(|&c| c >= n.max(1)) {
        return crate::error::invalid("initial partition must give each node an id below n");
    }
    if g.n_edges() == 0 {
        return Ok(Labels::compact(&(0..n).collect::<Vec<_>>()));
    }
    let two_m = 2.0 * g.n_edges() as f64;
    let mut rng = seeded_rng(seed, 30);
    let base = Level::base(g);
    let mut node_map: Vec<usize> = (0..n).collect();
    let mut level = Level::base(g);
    let mut comm = initial.to_vec();
    loop {
        move_nodes(&level, &mut comm, gamma, two_m, &mut rng);
        if distinct(&comm) == level.n() {
            break;
        }
        let (mut refined, mut count) = refine(&level, &comm, gamma, two_m, &mut rng);
        if count == level.n() {
            let compact = Labels::compact(&comm);
            count = compact.n_clusters();
            refined = compact.as_slice().to_vec();
        }
        let mut next_comm = vec![0; count];
        for u in 0..level.n() {
            next_comm[refined[u]] = comm[u];
        }
        for m in node_map.iter_mut() {
            *m = refined[*m];
        }
        level = level.aggregate(&refined, count);
        comm = Labels::compact(&next_comm).as_slice().to_vec();
    }
    let mut labels: Vec<usize> = node_map.iter().map(|&a| comm[a]).collect();
    // A full sweep without moves certifies node optimality.
    while move_nodes(&base, &mut labels, gamma, two_m, &mut rng) {}
    Ok(Labels::compact(&labels))
}

/// Leiden from the singleton partition.
pub fn leiden<T: Scalar>(g: &Graph<T>, gamma: f64, seed: u64) -> Result<Labels> {
    leiden_from(g, gamma, seed, &(0..g.n_nodes()).collect::<Vec<_>>())
}

/// Runs Leiden at every grid resolution and keeps the partition with the
/// highest mean AMI against all others (smallest resolution on ties).
pub fn select_resolution<T: Scalar>(g: &Graph<T>, params: &ClusterParams) -> Result<(f64, Labels)> {
    let mut grid = params.resolution_grid.clone();
    grid.sort_by(f64::total_cmp);
    let parts: Vec<Labels> = grid
        .par_iter()
        .map(|&gamma| leiden(g, gamma, params.seed))
        .collect::<Result<_>>()?;
    let k = parts.len();
    let mut score = vec![0.0; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let a = ami(parts[i].as_slice(), parts[j].as_slice())?;
            score[i] += a;
            score[j] += a;
        }
    }
    let mut best = 0;
    for i in 1..k {
        if score[i] > score[best] + 1e-12 {
            best = i;
        }
    }
    Ok((grid[best], parts.into_iter().nth(best).expect("non-empty grid")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalmetrics::ari;
    use crate::netgraph::modularity;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph<f64> {
        Graph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
    }

    fn two_triangles() -> Graph<f64> {
        graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    }

    fn set_partitions(n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for p in &out {
                let k = p.iter().max().map_or(0, |&m| m + 1);
                for c in 0..=k {
                    let mut q = p.clone();
                    q.push(c);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    // Q gain of the best single-node relocation, by recomputing Q from scratch.
    fn best_single_move(g: &Graph<f64>, labels: &[usize], gamma: f64) -> f64 {
        let q0 = modularity(g, labels, gamma).unwrap();
        let k = labels.iter().max().unwrap() + 2;
        let mut best = f64::MIN;
        let mut l = labels.to_vec();
        for v in 0..labels.len() {
            for c in 0..k {
                l[v] = c;
                best = best.max(modularity(g, &l, gamma).unwrap() - q0);
            }
            l[v] = labels[v];
        }
        best
    }

    // Planted partition: dense within groups, sparse across.
    fn planted(n: usize, groups: usize, p_in: f64, p_out: f64, seed: u64) -> (Graph<f64>, Vec<usize>) {
        let mut rng = seeded_rng(seed, 99);
        let truth: Vec<usize> = (0..n).map(|i| i % groups).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let p = if truth[u] == truth[v] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    edges.push((u, v, 1.0));
                }
            }
        }
        (Graph::from_edges(n, edges).unwrap(), truth)
    }

    #[test]
    fn two_triangles_global_optimum() {
        let g = two_triangles();
        let best = set_partitions(6)
            .iter()
            .map(|p| modularity(&g, p, 1.0).unwrap())
            .fold(f64::MIN, f64::max);
        assert!((best - 0.5).abs() < 1e-12);
        let l = leiden(&g, 1.0, 0).unwrap();
        assert_eq!(l.as_slice(), &[0, 0, 0, 1, 1, 1]);
        assert!((modularity(&g, l.as_slice(), 1.0).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_one_cluster() {
        let edges: Vec<_> = (0..8).flat_map(|u| ((u + 1)..8).map(move |v| (u, v))).collect();
        let l = leiden(&graph(8, &edges), 1.0, 4).unwrap();
        assert_eq!(l.n_clusters(), 1);
    }

    #[test]
    fn empty_and_edgeless() {
        assert!(leiden(&graph(0, &[]), 1.0, 0).unwrap().is_empty());
        assert_eq!(leiden(&graph(3, &[]), 1.0, 0).unwrap().n_clusters(), 3);
    }

    #[test]
    fn node_optimal_on_planted_graphs() {
        for seed in 0..4 {
            let (g, _) = planted(60, 4, 0.3, 0.05, seed);
            for gamma in [0.5, 1.0, 2.0] {
                let l = leiden(&g, gamma, seed).unwrap();
                assert!(best_single_move(&g, l.as_slice(), gamma) <= 1e-12);
                let trivial = modularity(&g, &vec![0; 60], gamma).unwrap();
                assert!(modularity(&g, l.as_slice(), gamma).unwrap() >= trivial - 1e-12);
            }
        }
    }

    #[test]
    fn node_optimal_at_n200() {
        let (g, truth) = planted(200, 5, 0.15, 0.01, 7);
        let l = leiden(&g, 1.0, 1).unwrap();
        assert!(best_single_move(&g, l.as_slice(), 1.0) <= 1e-12);
        assert!(ari(l.as_slice(), &truth).unwrap() > 0.9);
    }

    #[test]
    fn deterministic_given_seed() {
        let (g, _) = planted(80, 4, 0.2, 0.05, 3);
        assert_eq!(leiden(&g, 1.0, 11).unwrap(), leiden(&g, 1.0, 11).unwrap());
    }

    #[test]
    fn relabeling_invariance() {
        let (g, truth) = planted(90, 3, 0.4, 0.02, 5);
        let perm: Vec<usize> = (0..90).map(|i| (i * 37 + 11) % 90).collect();
        let h = Graph::from_edges(90, g.edges().iter().map(|&(u, v, w)| (perm[u], perm[v], w))).unwrap();
        let a = leiden(&g, 1.0, 2).unwrap();
        let b = leiden(&h, 1.0, 2).unwrap();
        let b_back: Vec<usize> = (0..90).map(|i| b.get(perm[i])).collect();
        assert_eq!(ari(a.as_slice(), &b_back).unwrap(), 1.0);
        assert_eq!(ari(a.as_slice(), &truth).unwrap(), 1.0);
    }

    #[test]
    fn resolution_selection() {
        let (gamma, l) = select_resolution(&two_triangles(), &ClusterParams::default()).unwrap();
        assert_eq!(l.as_slice(), &[0, 0, 0, 1, 1, 1]);
        // Every grid point agrees, so the smallest resolution wins.
        assert!((gamma - 0.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_graphs_node_optimal(bits in proptest::collection::vec(proptest::bool::weighted(0.15), 30 * 29 / 2), seed in 0u64..100, gamma in 0.3f64..2.5) {
            let mut edges = Vec::new();
            let mut idx = 0;
            for u in 0..30 {
                for v in (u + 1)..30 {
                    if bits[idx] { edges.push((u, v)); }
                    idx += 1;
                }
            }
            let g = graph(30, &edges);
            let l = leiden(&g, gamma, seed).unwrap();
            prop_assert!(best_single_move(&g, l.as_slice(), gamma) <= 1e-12);
        }
    }
}
