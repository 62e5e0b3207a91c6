use ndarray::Array2;

use super::{check_every_entity_somewhere, check_same_shape, Fusion, FusionParams, FusionWarning, PartialPolicy};
use crate::error::{invalid, Result};
use crate::simkern::{zscore, Orientation, SimilarityMatrix};
use crate::Scalar;

/// Z-scores a modality and zeroes every entry with `|z| <= sigma`.
///
/// Returns the thresholded matrix and whether the modality was degenerate.
pub fn threshold_extremes<T: Scalar>(s: &SimilarityMatrix<T>, sigma: f64) -> Result<(SimilarityMatrix<T>, bool)> {
    let z = zscore(s)?;
    let sigma = T::of(sigma);
    let n = s.n();
    let mut values = z.matrix.values().to_owned();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                values[[i, j]] = T::zero();
            } else if s.is_defined(i, j) && values[[i, j]].abs() <= sigma {
                values[[i, j]] = T::zero();
            }
        }
    }
    Ok((
        SimilarityMatrix::new(values, s.orientation(), s.present().to_vec())?,
        z.degenerate,
    ))
}

/// Mean of thresholded z-scored affinities.
///
/// With `ExtremeShared`, each entry averages the modalities that record both
/// entities; entries with no retained extreme value anywhere take the minimum
/// fused value.
pub fn extreme_mean<T: Scalar>(
    mats: &[SimilarityMatrix<T>],
    params: &FusionParams,
    policy: PartialPolicy,
) -> Result<Fusion<T>> {
    check_same_shape(mats)?;
    if mats[0].orientation() != Orientation::Affinity {
        return invalid("extreme mean expects affinity matrices");
    }
    let shared = match policy {
        PartialPolicy::None => {
            if mats.iter().any(|s| !s.is_total()) {
                return invalid("partial data needs the extreme-shared policy");
            }
            false
        }
        PartialPolicy::ExtremeShared => {
            check_every_entity_somewhere(mats)?;
            true
        }
        other => return invalid(format!("extreme mean does not support policy {other}")),
    };
    let mut warnings = Vec::new();
    let mut thresholded = Vec::with_capacity(mats.len());
    for (v, s) in mats.iter().enumerate() {
        let (t, degenerate) = threshold_extremes(s, params.threshold_sigma)?;
        if degenerate {
            log::warn!("modality {v} has constant affinities; contributes zeros");
            warnings.push(FusionWarning::DegenerateModality(v));
        }
        thresholded.push(t);
    }
    let n = mats[0].n();
    let m = T::of(mats.len() as f64);
    let mut values = Array2::zeros((n, n));
    if !shared {
        for t in &thresholded {
            values = values + t.values();
        }
        values.mapv_inplace(|v| v / m);
        return Ok(Fusion {
            matrix: SimilarityMatrix::total(values, Orientation::Affinity)?,
            iterations: None,
            warnings,
        });
    }
    let mut missing = Vec::new();
    let mut floor = T::infinity();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = T::zero();
            let mut defined = 0usize;
            let mut retained = false;
            for t in thresholded.iter().filter(|t| t.is_defined(i, j)) {
                let v = t.get(i, j);
                sum = sum + v;
                defined += 1;
                retained |= v != T::zero();
            }
            if retained {
                let mean = sum / T::of(defined as f64);
                floor = floor.min(mean);
                values[[i, j]] = mean;
                values[[j, i]] = mean;
            } else {
                missing.push((i, j));
            }
        }
    }
    if !floor.is_finite() {
        floor = T::zero();
    }
    for (i, j) in missing {
        values[[i, j]] = floor;
        values[[j, i]] = floor;
    }
    Ok(Fusion {
        matrix: SimilarityMatrix::total(values, Orientation::Affinity)?,
        iterations: None,
        warnings,
    })
}
