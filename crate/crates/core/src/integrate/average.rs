use ndarray::{concatenate, Array2, Axis};

use super::{check_every_entity_somewhere, check_same_shape, PartialPolicy};
use crate::error::{invalid, Result};
use crate::mmgen::ModalityData;
use crate::simkern::{euclidean_rows, Orientation, SimilarityMatrix};
use crate::Scalar;

/// Horizontally concatenated (encoded) feature blocks; with
/// `FeatureMeanImpute`, absent rows take the column means of present rows.
pub fn concatenated_features<T: Scalar>(
    modalities: &[ModalityData<T>],
    policy: PartialPolicy,
) -> Result<Array2<T>> {
    let Some(first) = modalities.first() else {
        return invalid("need at least one modality");
    };
    let n = first.n_entities();
    if modalities.iter().any(|m| m.n_entities() != n) {
        return invalid("modalities disagree on entity count");
    }
    if let Some(e) = (0..n).find(|&e| modalities.iter().all(|m| !m.present[e])) {
        return invalid(format!("entity {e} is absent from every modality"));
    }
    let partial = modalities.iter().any(|m| m.n_present() < n);
    match policy {
        PartialPolicy::None if partial => {
            return invalid("partial data needs the feature-mean imputation policy")
        }
        PartialPolicy::None | PartialPolicy::FeatureMeanImpute => {}
        other => return invalid(format!("concatenation does not support policy {other}")),
    }
    let blocks: Vec<Array2<T>> = modalities
        .iter()
        .map(|m| {
            let mut block = m.encoded();
            if m.n_present() < n {
                let cnt = T::of(m.n_present() as f64);
                for mut col in block.columns_mut() {
                    let mean = col
                        .iter()
                        .zip(&m.present)
                        .filter(|(_, &p)| p)
                        .map(|(&v, _)| v)
                        .sum::<T>()
                        / cnt;
                    for (v, &p) in col.iter_mut().zip(&m.present) {
                        if !p {
                            *v = mean;
                        }
                    }
                }
            }
            block
        })
        .collect();
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    concatenate(Axis(1), &views).map_err(|e| crate::Error::InvalidArgument(e.to_string()))
}

/// Euclidean distances on the concatenated feature matrix.
pub fn concat_features<T: Scalar>(
    modalities: &[ModalityData<T>],
    policy: PartialPolicy,
) -> Result<SimilarityMatrix<T>> {
    let x = concatenated_features(modalities, policy)?;
    let present = vec![true; x.nrows()];
    SimilarityMatrix::new(euclidean_rows(&x, &present), Orientation::Distance, present)
}

fn most_dissimilar<T: Scalar>(orientation: Orientation, values: impl Iterator<Item = T>) -> Option<T> {
    values.fold(None, |acc: Option<T>, v| {
        Some(match (acc, orientation) {
            (None, _) => v,
            (Some(a), Orientation::Distance) => a.max(v),
            (Some(a), Orientation::Affinity) => a.min(v),
        })
    })
}

/// Fills undefined entries with the matrix's most dissimilar defined
/// off-diagonal value (largest distance / smallest affinity); the diagonal of
/// absent entities becomes zero distance (or the most similar value).
pub fn impute_most_dissimilar<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<SimilarityMatrix<T>> {
    let worst = most_dissimilar(s.orientation(), s.off_diagonal())
        .ok_or_else(|| crate::Error::InvalidArgument("no defined pairwise values".into()))?;
    let n = s.n();
    let mut values = s.values().to_owned();
    for i in 0..n {
        for j in 0..n {
            if s.is_defined(i, j) {
                continue;
            }
            values[[i, j]] = if i != j {
                worst
            } else {
                match s.orientation() {
                    Orientation::Distance => T::zero(),
                    Orientation::Affinity => s.off_diagonal().fold(T::neg_infinity(), T::max),
                }
            };
        }
    }
    SimilarityMatrix::total(values, s.orientation())
}

/// Elementwise mean of per-modality matrices.
///
/// * `None`: every matrix must be fully defined.
/// * `ImputeMaxDistance`: undefined entries take that modality's most
///   dissimilar value first.
/// * `IgnoreNaN`: average over modalities defining the entry; entries
///   defined nowhere take the most dissimilar value over all modalities.
pub fn mean_similarity<T: Scalar>(
    mats: &[SimilarityMatrix<T>],
    policy: PartialPolicy,
) -> Result<SimilarityMatrix<T>> {
    check_same_shape(mats)?;
    let orientation = mats[0].orientation();
    let n = mats[0].n();
    let m = T::of(mats.len() as f64);
    match policy {
        PartialPolicy::None => {
            if mats.iter().any(|s| !s.is_total()) {
                return invalid("partial data needs an imputation or ignore-NaN policy");
            }
            let mut sum = Array2::<T>::zeros((n, n));
            for s in mats {
                sum = sum + s.values();
            }
            SimilarityMatrix::total(sum.mapv(|v| v / m), orientation)
        }
        PartialPolicy::ImputeMaxDistance => {
            let imputed = mats
                .iter()
                .map(impute_most_dissimilar)
                .collect::<Result<Vec<_>>>()?;
            mean_similarity(&imputed, PartialPolicy::None)
        }
        PartialPolicy::IgnoreNaN => {
            check_every_entity_somewhere(mats)?;
            let fallback = most_dissimilar(orientation, mats.iter().flat_map(|s| s.off_diagonal()))
                .ok_or_else(|| crate::Error::InvalidArgument("no defined pairwise values".into()))?;
            let mut values = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    let (sum, cnt) = mats
                        .iter()
                        .filter(|s| s.is_defined(i, j))
                        .fold((T::zero(), 0usize), |(a, c), s| (a + s.get(i, j), c + 1));
                    values[[i, j]] = if cnt > 0 {
                        sum / T::of(cnt as f64)
                    } else if i == j {
                        T::zero()
                    } else {
                        fallback
                    };
                }
            }
            SimilarityMatrix::total(values, orientation)
        }
        other => invalid(format!("mean similarity does not support policy {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmgen::{FeatureKind, Labels};
    use crate::simkern::pairwise_euclidean;
    use ndarray::array;

    fn modality(rows: Array2<f64>) -> ModalityData<f64> {
        let n = rows.nrows();
        ModalityData {
            features: rows,
            present: vec![true; n],
            labels: Labels::new(vec![0; n]).unwrap(),
            kind: FeatureKind::Continuous,
        }
    }

    #[test]
    fn concatenation_joins_features() {
        let a = modality(array![[0.0], [3.0]]);
        let b = modality(array![[0.0], [4.0]]);
        let d = concat_features(&[a.clone(), b], PartialPolicy::None).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        let single = concat_features(std::slice::from_ref(&a), PartialPolicy::None).unwrap();
        assert_eq!(single, pairwise_euclidean(&a).unwrap());
    }

    #[test]
    fn feature_mean_imputation_row() {
        let a = modality(array![[1.0, 2.0], [3.0, 4.0], [5.0, 9.0]]);
        let mut b = modality(array![[10.0], [20.0], [60.0]]);
        b.remove(1);
        let x = concatenated_features(&[a.clone(), b.clone()], PartialPolicy::FeatureMeanImpute).unwrap();
        assert_eq!(x.row(1).to_vec(), vec![3.0, 4.0, 35.0]);
        assert_eq!(x.row(0).to_vec(), vec![1.0, 2.0, 10.0]);
        assert!(concat_features(&[a.clone(), b.clone()], PartialPolicy::None).is_err());
        let mut a2 = a;
        a2.remove(1);
        assert!(concat_features(&[a2, b], PartialPolicy::FeatureMeanImpute).is_err());
    }

    fn dist(v: Array2<f64>, present: Vec<bool>) -> SimilarityMatrix<f64> {
        SimilarityMatrix::new(v, Orientation::Distance, present).unwrap()
    }

    #[test]
    fn mean_of_two() {
        let a = dist(array![[0.0, 2.0], [2.0, 0.0]], vec![true; 2]);
        let b = dist(array![[0.0, 4.0], [4.0, 0.0]], vec![true; 2]);
        let m = mean_similarity(&[a.clone(), b], PartialPolicy::None).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(mean_similarity(std::slice::from_ref(&a), PartialPolicy::None).unwrap(), a);
    }

    #[test]
    fn partial_policies_hand_values() {
        let nan = f64::NAN;
        // Modality 1: entity 2 absent, max defined distance 9.
        let a = dist(
            array![[0.0, 9.0, nan], [9.0, 0.0, nan], [nan, nan, nan]],
            vec![true, true, false],
        );
        let b = dist(array![[0.0, 1.0, 5.0], [1.0, 0.0, 3.0], [5.0, 3.0, 0.0]], vec![true; 3]);
        let imp = mean_similarity(&[a.clone(), b.clone()], PartialPolicy::ImputeMaxDistance).unwrap();
        assert_eq!(imp.get(0, 2), 7.0);
        assert_eq!(imp.get(2, 2), 0.0);
        let ign = mean_similarity(&[a.clone(), b.clone()], PartialPolicy::IgnoreNaN).unwrap();
        assert_eq!(ign.get(0, 2), 5.0);
        assert_eq!(ign.get(0, 1), 5.0);
        assert!(mean_similarity(&[a, b], PartialPolicy::None).is_err());
    }

    #[test]
    fn ignore_nan_empty_shared_set_takes_global_max() {
        let nan = f64::NAN;
        let a = dist(array![[0.0, nan, 2.0], [nan, nan, nan], [2.0, nan, 0.0]], vec![true, false, true]);
        let b = dist(array![[nan, nan, nan], [nan, 0.0, 6.0], [nan, 6.0, 0.0]], vec![false, true, true]);
        let ign = mean_similarity(&[a, b], PartialPolicy::IgnoreNaN).unwrap();
        assert_eq!(ign.get(0, 1), 6.0);
        assert_eq!(ign.get(1, 2), 6.0);
        assert_eq!(ign.get(0, 2), 2.0);
    }

    #[test]
    fn orientation_mismatch_rejected() {
        let a = dist(array![[0.0, 1.0], [1.0, 0.0]], vec![true; 2]);
        let b = SimilarityMatrix::total(array![[1.0, 0.5], [0.5, 1.0]], Orientation::Affinity).unwrap();
        assert!(mean_similarity(&[a, b], PartialPolicy::None).is_err());
    }

    #[test]
    fn mean_commutes_with_modality_order() {
        let a = dist(array![[0.0, 1.5, 2.0], [1.5, 0.0, 0.25], [2.0, 0.25, 0.0]], vec![true; 3]);
        let b = dist(array![[0.0, 4.0, 1.0], [4.0, 0.0, 7.0], [1.0, 7.0, 0.0]], vec![true; 3]);
        let c = dist(array![[0.0, 0.1, 0.3], [0.1, 0.0, 0.2], [0.3, 0.2, 0.0]], vec![true; 3]);
        let x = mean_similarity(&[a.clone(), b.clone(), c.clone()], PartialPolicy::None).unwrap();
        let y = mean_similarity(&[c, a, b], PartialPolicy::None).unwrap();
        for (p, q) in x.values().iter().zip(y.values().iter()) {
            assert!((p - q).abs() < 1e-15);
        }
    }
}
