use ndarray::{Array2, Axis, Zip};
use rayon::prelude::*;

use super::{check_same_shape, Fusion, FusionParams, FusionWarning, KnnStructure, PartialPolicy};
use crate::error::{invalid, Result};
use crate::simkern::{Orientation, SimilarityMatrix};
use crate::Scalar;

/// Row-sparse matrix: per row, `(column, value)` pairs.
pub type SparseRows<T> = Vec<Vec<(usize, T)>>;

/// Status matrix normalisation: off-diagonal `W(i,j) / (2 * sum_{k != i} W(i,k))`,
/// diagonal `1/2`, so every row sums to one.
pub fn kernel_normalize<T: Scalar>(w: &Array2<T>) -> Array2<T> {
    let half = T::of(0.5);
    let mut p = w.clone();
    p.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let off: T = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .sum();
            let denom = off + off;
            for (j, v) in row.iter_mut().enumerate() {
                *v = if j == i { half } else { *v / denom };
            }
        });
    p
}

/// KNN-restricted row normalisation: `W(i,j) / sum_{k in N_i} W(i,k)` for
/// `j in N_i`, zero elsewhere.
pub fn knn_normalize<T: Scalar>(w: &SimilarityMatrix<T>, k: usize) -> Result<SparseRows<T>> {
    let knn = KnnStructure::build(w, k)?;
    Ok((0..w.n())
        .map(|i| {
            let nb = knn.neighbors(i);
            let total: T = nb.iter().map(|&j| w.get(i, j)).sum();
            nb.iter().map(|&j| (j, w.get(i, j) / total)).collect()
        })
        .collect())
}

/// `S * Q * S^T` for row-sparse `S`.
pub fn diffusion_step<T: Scalar>(s: &SparseRows<T>, q: &Array2<T>) -> Array2<T> {
    let n = q.nrows();
    let mut out = Array2::zeros((n, n));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let mut left = vec![T::zero(); n];
            for &(k, w) in &s[i] {
                for (acc, &v) in left.iter_mut().zip(q.row(k).iter()) {
                    *acc = *acc + w * v;
                }
            }
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = s[j].iter().map(|&(l, w)| w * left[l]).sum();
            }
        });
    out
}

fn frobenius<T: Scalar>(a: &Array2<T>) -> f64 {
    a.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt()
}

/// Similarity network fusion; see [`snf_fuse_observed`].
pub fn snf_fuse<T: Scalar>(
    mats: &[SimilarityMatrix<T>],
    params: &FusionParams,
    policy: PartialPolicy,
) -> Result<Fusion<T>> {
    snf_fuse_observed(mats, params, policy, |_, _| {})
}

/// Similarity network fusion over fully defined affinity matrices.
///
/// Every iteration updates all modalities from the previous iterate
/// (`P_v <- S_v * mean_{u != v} P_u * S_v^T`), symmetrises each result and
/// renormalises it with [`kernel_normalize`]. `observer` sees the iteration
/// number and all status matrices after each update. Partial data must be
/// imputed at the distance stage before the kernel.
pub fn snf_fuse_observed<T: Scalar>(
    mats: &[SimilarityMatrix<T>],
    params: &FusionParams,
    policy: PartialPolicy,
    mut observer: impl FnMut(usize, &[Array2<T>]),
) -> Result<Fusion<T>> {
    params.validate()?;
    check_same_shape(mats)?;
    match policy {
        PartialPolicy::None | PartialPolicy::ImputeMaxDistance => {}
        other => return invalid(format!("SNF does not support policy {other}")),
    }
    if mats.len() < 2 {
        return invalid("SNF needs at least two modalities");
    }
    if mats[0].orientation() != Orientation::Affinity {
        return invalid("SNF expects affinity matrices");
    }
    if mats.iter().any(|m| !m.is_total()) {
        return invalid("SNF needs fully defined affinities; impute distances first");
    }
    let n = mats[0].n();
    let k = params.kernel.k_neighbors;
    if n <= k {
        return invalid(format!("SNF needs more than {k} entities, got {n}"));
    }
    let m = mats.len();
    let others = T::of((m - 1) as f64);
    let local: Vec<SparseRows<T>> = mats
        .iter()
        .map(|w| knn_normalize(w, k))
        .collect::<Result<_>>()?;
    let mut status: Vec<Array2<T>> = mats
        .iter()
        .map(|w| kernel_normalize(&w.values().to_owned()))
        .collect();

    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < params.snf_max_iters {
        let mut total = Array2::<T>::zeros((n, n));
        for p in &status {
            total = total + p;
        }
        let next: Vec<(Array2<T>, f64)> = (0..m)
            .into_par_iter()
            .map(|v| {
                let mut rest = &total - &status[v];
                rest.mapv_inplace(|x| x / others);
                let diffused = diffusion_step(&local[v], &rest);
                let mut sym = diffused.clone();
                let half = T::of(0.5);
                Zip::from(&mut sym)
                    .and(&diffused.t())
                    .for_each(|a, &b| *a = (*a + b) * half);
                let p = kernel_normalize(&sym);
                let delta = frobenius(&(&p - &status[v])) / frobenius(&status[v]);
                (p, delta)
            })
            .collect();
        change = next.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        status = next.into_iter().map(|(p, _)| p).collect();
        iterations += 1;
        observer(iterations, &status);
        if change < params.snf_tol {
            break;
        }
    }

    let mut warnings = Vec::new();
    if change >= params.snf_tol {
        log::warn!("SNF stopped after {iterations} iterations, relative change {change:.3e}");
        warnings.push(FusionWarning::NotConverged { iterations, change });
    }
    let mut fused = Array2::<T>::zeros((n, n));
    for p in &status {
        fused = fused + p;
    }
    let scale = T::of(0.5 / m as f64);
    let fused = Array2::from_shape_fn((n, n), |(i, j)| (fused[[i, j]] + fused[[j, i]]) * scale);
    Ok(Fusion {
        matrix: SimilarityMatrix::total(fused, Orientation::Affinity)?,
        iterations: Some(iterations),
        warnings,
    })
}
