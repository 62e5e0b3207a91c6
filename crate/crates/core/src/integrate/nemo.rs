use ndarray::Array2;

use super::{check_every_entity_somewhere, check_same_shape, Fusion, FusionParams, KnnStructure};
use crate::error::{invalid, Result};
use crate::simkern::{Orientation, SimilarityMatrix};
use crate::Scalar;

/// Relative similarity of one modality: each entity's affinities to its
/// neighbours normalised by their sum, added over both directions.
///
/// Only present entities take part; undefined entries stay `NaN`.
pub fn relative_similarity<T: Scalar>(w: &SimilarityMatrix<T>, k: usize) -> Result<SimilarityMatrix<T>> {
    if w.orientation() != Orientation::Affinity {
        return invalid("NEMO expects affinity matrices");
    }
    let knn = KnnStructure::build(w, k)?;
    let n = w.n();
    let mut s = Array2::from_shape_fn((n, n), |(i, j)| {
        if w.is_defined(i, j) {
            T::zero()
        } else {
            T::nan()
        }
    });
    for i in 0..n {
        let nb = knn.neighbors(i);
        let total: T = nb.iter().map(|&j| w.get(i, j)).sum();
        for &j in nb {
            let share = w.get(i, j) / total;
            s[[i, j]] = s[[i, j]] + share;
            s[[j, i]] = s[[j, i]] + share;
        }
    }
    SimilarityMatrix::new(s, Orientation::Affinity, w.present().to_vec())
}

/// NEMO fusion: per-modality relative similarities averaged over the
/// modalities recording both entities; pairs sharing no modality get zero.
pub fn nemo_fuse<T: Scalar>(mats: &[SimilarityMatrix<T>], params: &FusionParams) -> Result<Fusion<T>> {
    params.validate()?;
    check_same_shape(mats)?;
    check_every_entity_somewhere(mats)?;
    let rel = mats
        .iter()
        .map(|w| relative_similarity(w, params.kernel.k_neighbors))
        .collect::<Result<Vec<_>>>()?;
    let n = mats[0].n();
    let mut fused = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (sum, cnt) = rel
                .iter()
                .filter(|s| s.is_defined(i, j))
                .fold((T::zero(), 0usize), |(a, c), s| (a + s.get(i, j), c + 1));
            if cnt > 0 {
                fused[[i, j]] = sum / T::of(cnt as f64);
            }
        }
    }
    Ok(Fusion::plain(SimilarityMatrix::total(fused, Orientation::Affinity)?))
}
