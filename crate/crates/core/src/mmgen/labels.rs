use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seeded_rng;
use crate::error::{invalid, Result};

/// Cluster assignment of every entity; ids are `0..n_clusters` and every id is used.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Labels {
    assignments: Vec<usize>,
    n_clusters: usize,
}

impl Labels {
    /// Builds labels from raw ids, requiring the used ids to be exactly `0..=max`.
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        let n_clusters = assignments.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; n_clusters];
        for &a in &assignments {
            seen[a] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return invalid(format!("cluster id {empty} is unused"));
        }
        Ok(Self {
            assignments,
            n_clusters,
        })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn compact(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignments = raw
            .iter()
            .map(|&r| {
                let next = map.len();
                *map.entry(r).or_insert(next)
            })
            .collect();
        Self {
            assignments,
            n_clusters: map.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assignments
    }

    pub fn get(&self, entity: usize) -> usize {
        self.assignments[entity]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Entity indices of every cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_clusters];
        for (e, &a) in self.assignments.iter().enumerate() {
            members[a].push(e);
        }
        members
    }

    /// True when every pair co-clustered in `self` is co-clustered in `coarser`.
    pub fn refines(&self, coarser: &Labels) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut parent = vec![None; self.n_clusters];
        for (&fine, &coarse) in self.assignments.iter().zip(&coarser.assignments) {
            match parent[fine] {
                None => parent[fine] = Some(coarse),
                Some(p) if p != coarse => return false,
                Some(_) => {}
            }
        }
        true
    }
}

impl AsRef<[usize]> for Labels {
    fn as_ref(&self) -> &[usize] {
        &self.assignments
    }
}

impl TryFrom<Vec<usize>> for Labels {
    type Error = crate::Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Labels::new(v)
    }
}

impl From<Labels> for Vec<usize> {
    fn from(l: Labels) -> Self {
        l.assignments
    }
}

/// Equal-size clusters (sizes differ by at most one) in seeded random order.
pub fn gen_labels(n: usize, k: usize, seed: u64) -> Result<Labels> {
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got k={k}, n={n}"));
    }
    let mut assignments: Vec<usize> = (0..n).map(|i| i % k).collect();
    assignments.shuffle(&mut seeded_rng(seed, 0));
    Ok(Labels {
        assignments,
        n_clusters: k,
    })
}

/// Equal-size labels unrelated to any other labelling.
pub fn random_labels(n: usize, k: usize, seed: u64) -> Result<Labels> {
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got k={k}, n={n}"));
    }
    let mut assignments: Vec<usize> = (0..n).map(|i| i % k).collect();
    assignments.shuffle(&mut seeded_rng(seed, 1));
    Ok(Labels {
        assignments,
        n_clusters: k,
    })
}

/// Maps every cluster of `y` wholly onto one of `k_target` super-clusters.
///
/// The map is a uniformly random function redrawn until it is onto, so
/// super-cluster sizes can be very unequal.
pub fn merge_labels(y: &Labels, k_target: usize, seed: u64) -> Result<Labels> {
    let k = y.n_clusters();
    if k_target == 0 || k_target >= k {
        return invalid(format!(
            "merge target must be in 1..{k}, got {k_target}"
        ));
    }
    let mut rng = seeded_rng(seed, 2);
    let map = loop {
        let map: Vec<usize> = (0..k).map(|_| rng.random_range(0..k_target)).collect();
        let mut hit = vec![false; k_target];
        for &m in &map {
            hit[m] = true;
        }
        if hit.iter().all(|&h| h) {
            break map;
        }
    };
    Ok(Labels {
        assignments: y.assignments.iter().map(|&a| map[a]).collect(),
        n_clusters: k_target,
    })
}

/// Splits the clusters of `y` into `k_target` sub-clusters.
///
/// Sub-cluster counts per parent follow a uniformly random composition of
/// `k_target` with every part at least one (and no larger than the parent);
/// each parent's members are then dealt evenly over its sub-clusters in
/// random order.
pub fn split_labels(y: &Labels, k_target: usize, seed: u64) -> Result<Labels> {
    let k = y.n_clusters();
    if k_target <= k {
        return invalid(format!(
            "split target must exceed {k}, got {k_target}"
        ));
    }
    if k_target > y.len() {
        return invalid(format!(
            "split target {k_target} exceeds entity count {}",
            y.len()
        ));
    }
    let members = y.members();
    let mut rng = seeded_rng(seed, 3);
    let parts = loop {
        let parts = random_composition(k_target, k, &mut rng);
        if parts.iter().zip(&members).all(|(&p, m)| p <= m.len()) {
            break parts;
        }
    };
    let mut assignments = vec![0; y.len()];
    let mut next_id = 0;
    for (mut group, &n_sub) in members.into_iter().zip(&parts) {
        group.shuffle(&mut rng);
        for (i, e) in group.into_iter().enumerate() {
            assignments[e] = next_id + i % n_sub;
        }
        next_id += n_sub;
    }
    Ok(Labels {
        assignments,
        n_clusters: k_target,
    })
}

// Uniform over compositions of `total` into `parts` positive integers.
fn random_composition(total: usize, parts: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut cuts = rand::seq::index::sample(rng, total - 1, parts - 1).into_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c + 1 - prev);
        prev = c + 1;
    }
    out.push(total - prev);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn co_clustered_pairs_kept(fine: &Labels, coarse: &Labels) -> bool {
        let n = fine.len();
        (0..n).all(|i| {
            (0..n).all(|j| fine.get(i) != fine.get(j) || coarse.get(i) == coarse.get(j))
        })
    }

    #[test]
    fn equal_sizes() {
        let l = gen_labels(4, 2, 1).unwrap();
        assert_eq!(l.sizes(), vec![2, 2]);
        let l = gen_labels(2500, 10, 7).unwrap();
        assert!(l.sizes().iter().all(|&s| s == 250));
        let mut s = gen_labels(5, 2, 3).unwrap().sizes();
        s.sort();
        assert_eq!(s, vec![2, 3]);
    }

    #[test]
    fn too_many_clusters_rejected() {
        assert!(gen_labels(3, 4, 0).is_err());
        assert!(gen_labels(3, 0, 0).is_err());
        assert!(random_labels(3, 4, 0).is_err());
    }

    #[test]
    fn random_labels_square_is_permutation() {
        let mut l = random_labels(10, 10, 5).unwrap().as_slice().to_vec();
        l.sort();
        assert_eq!(l, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn random_labels_vary_with_seed() {
        // 6 distinct equal-size labellings of 4 entities into 2 ids; 20 seeds
        // all colliding has probability 6^-19.
        let first = random_labels(4, 2, 0).unwrap();
        assert!((1..20).any(|s| random_labels(4, 2, s).unwrap() != first));
    }

    #[test]
    fn merge_to_one() {
        let y = gen_labels(6, 2, 0).unwrap();
        let m = merge_labels(&y, 1, 0).unwrap();
        assert!(m.as_slice().iter().all(|&a| a == 0));
    }

    #[test]
    fn merge_ten_into_five() {
        let y = gen_labels(200, 10, 4).unwrap();
        for seed in 0..10 {
            let m = merge_labels(&y, 5, seed).unwrap();
            assert_eq!(m.n_clusters(), 5);
            assert!(m.sizes().iter().all(|&s| s > 0));
            assert!(co_clustered_pairs_kept(&y, &m));
        }
    }

    #[test]
    fn merge_target_bounds() {
        let y = gen_labels(20, 4, 0).unwrap();
        assert!(merge_labels(&y, 4, 0).is_err());
        assert!(merge_labels(&y, 0, 0).is_err());
    }

    #[test]
    fn split_single_cluster() {
        let y = Labels::new(vec![0; 4]).unwrap();
        let s = split_labels(&y, 2, 9).unwrap();
        assert_eq!(s.sizes(), vec![2, 2]);
    }

    #[test]
    fn split_full_scale() {
        let y = gen_labels(2500, 10, 1).unwrap();
        let s = split_labels(&y, 20, 1).unwrap();
        assert_eq!(s.n_clusters(), 20);
        assert!(s.sizes().iter().all(|&c| c > 0));
        assert!(s.refines(&y));
    }

    #[test]
    fn split_target_bounds() {
        let y = gen_labels(5, 2, 0).unwrap();
        assert!(split_labels(&y, 2, 0).is_err());
        assert!(split_labels(&y, 6, 0).is_err());
        assert!(split_labels(&y, 5, 0).is_ok());
    }

    #[test]
    fn labels_validation() {
        assert!(Labels::new(vec![0, 2]).is_err());
        assert_eq!(Labels::compact(&[7, 3, 7]).as_slice(), &[0, 1, 0]);
    }

    proptest! {
        #[test]
        fn merge_is_refined_by_input(n in 20usize..200, k in 3usize..10, t in 1usize..3, seed: u64) {
            let y = gen_labels(n, k, seed).unwrap();
            let m = merge_labels(&y, t, seed).unwrap();
            prop_assert!(co_clustered_pairs_kept(&y, &m));
            prop_assert!(y.refines(&m));
        }

        #[test]
        fn split_refines_input(n in 40usize..200, k in 2usize..8, extra in 1usize..12, seed: u64) {
            let y = gen_labels(n, k, seed).unwrap();
            let s = split_labels(&y, k + extra, seed).unwrap();
            prop_assert!(co_clustered_pairs_kept(&s, &y));
            prop_assert_eq!(s.sizes().iter().filter(|&&c| c > 0).count(), k + extra);
        }

        #[test]
        fn gen_labels_deterministic(n in 1usize..100, seed: u64) {
            let k = 1 + (seed as usize) % n;
            prop_assert_eq!(gen_labels(n, k, seed).unwrap(), gen_labels(n, k, seed).unwrap());
        }
    }
}
