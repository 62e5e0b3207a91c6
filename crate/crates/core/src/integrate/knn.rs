use std::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::simkern::{Orientation, SimilarityMatrix};
use crate::Scalar;

/// The `k` closest present entities of every present entity (self excluded,
/// ties to the lower index), ordered closest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnStructure {
    neighbors: Vec<Vec<usize>>,
    k: usize,
}

/// Orders candidate `(value, index)` pairs closest first.
pub(crate) fn closeness<T: Scalar>(orientation: Orientation) -> impl Fn(&(T, usize), &(T, usize)) -> Ordering {
    move |a, b| {
        let by_value = match orientation {
            Orientation::Distance => a.0.partial_cmp(&b.0),
            Orientation::Affinity => b.0.partial_cmp(&a.0),
        }
        .unwrap_or_else(|| a.0.is_nan().cmp(&b.0.is_nan()));
        by_value.then(a.1.cmp(&b.1))
    }
}

impl KnnStructure {
    pub fn build<T: Scalar>(s: &SimilarityMatrix<T>, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("k must be positive");
        }
        if s.n_present() <= k {
            return invalid(format!(
                "{} present entities cannot supply {k} neighbours each",
                s.n_present()
            ));
        }
        let cmp = closeness::<T>(s.orientation());
        let n = s.n();
        let present = s.present();
        let neighbors = (0..n)
            .map(|i| {
                if !present[i] {
                    return Vec::new();
                }
                let mut cand: Vec<(T, usize)> = (0..n)
                    .filter(|&j| j != i && present[j])
                    .map(|j| (s.get(i, j), j))
                    .collect();
                cand.select_nth_unstable_by(k - 1, &cmp);
                cand.truncate(k);
                cand.sort_unstable_by(&cmp);
                cand.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        Ok(Self { neighbors, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].contains(&j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn ties_break_to_lower_index() {
        let d = SimilarityMatrix::total(
            array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]],
            Orientation::Distance,
        )
        .unwrap();
        let knn = KnnStructure::build(&d, 1).unwrap();
        assert_eq!(knn.neighbors(0), &[1]);
        assert_eq!(knn.neighbors(1), &[0]);
        assert_eq!(knn.neighbors(2), &[0]);
    }

    #[test]
    fn affinity_prefers_large_values() {
        let w = SimilarityMatrix::total(
            array![[1.0, 0.2, 0.9], [0.2, 1.0, 0.5], [0.9, 0.5, 1.0]],
            Orientation::Affinity,
        )
        .unwrap();
        let knn = KnnStructure::build(&w, 1).unwrap();
        assert_eq!(knn.neighbors(0), &[2]);
        assert_eq!(knn.neighbors(1), &[2]);
        let both = KnnStructure::build(&w, 2).unwrap();
        assert_eq!(both.neighbors(1), &[2, 0]);
    }

    #[test]
    fn absent_entities_have_no_neighbours() {
        let w = SimilarityMatrix::new(
            array![[0.0, 1.0, 2.0, 3.0], [1.0, 0.0, 1.0, 2.0], [2.0, 1.0, 0.0, 1.0], [3.0, 2.0, 1.0, 0.0]],
            Orientation::Distance,
            vec![true, false, true, true],
        )
        .unwrap();
        let knn = KnnStructure::build(&w, 2).unwrap();
        assert!(knn.neighbors(1).is_empty());
        assert_eq!(knn.neighbors(0), &[2, 3]);
        assert!(KnnStructure::build(&w, 3).is_err());
    }
}
