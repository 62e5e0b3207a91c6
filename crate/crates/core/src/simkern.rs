//! Pairwise distances, the scaled exponential affinity kernel and z-scoring.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::integrate::KnnStructure;
use crate::mmgen::ModalityData;
use crate::Scalar;

/// Whether larger entries mean "more alike" or "further apart".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Distance,
    Affinity,
}

/// Square pairwise matrix over `n` entities.
///
/// Entry `(i, j)` is defined iff both entities are present; undefined entries
/// hold `NaN`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<T> {
    values: Array2<T>,
    orientation: Orientation,
    present: Vec<bool>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn new(values: Array2<T>, orientation: Orientation, present: Vec<bool>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c || present.len() != r {
            return invalid(format!(
                "expected square matrix matching {} entities, got {r}x{c}",
                present.len()
            ));
        }
        Ok(Self {
            values,
            orientation,
            present,
        })
    }

    /// Matrix with every entity present.
    pub fn total(values: Array2<T>, orientation: Orientation) -> Result<Self> {
        let n = values.nrows();
        Self::new(values, orientation, vec![true; n])
    }

    pub fn n(&self) -> usize {
        self.present.len()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn is_total(&self) -> bool {
        self.present.iter().all(|&p| p)
    }

    pub fn is_defined(&self, i: usize, j: usize) -> bool {
        self.present[i] && self.present[j]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[[i, j]]
    }

    pub fn n_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// Largest absolute asymmetry over defined entries.
    pub fn asymmetry(&self) -> T {
        let n = self.n();
        let mut worst = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.is_defined(i, j) {
                    worst = worst.max((self.values[[i, j]] - self.values[[j, i]]).abs());
                }
            }
        }
        worst
    }

    /// Off-diagonal defined entries `(i < j)`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = T> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| {
            ((i + 1)..n)
                .filter(move |&j| self.is_defined(i, j))
                .map(move |j| self.values[[i, j]])
        })
    }
}

/// Euclidean distances between the present rows of a feature block.
pub(crate) fn euclidean_rows<T: Scalar>(features: &Array2<T>, present: &[bool]) -> Array2<T> {
    let n = features.nrows();
    let mut out = Array2::from_elem((n, n), T::nan());
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            if !present[i] {
                return;
            }
            let xi = features.row(i);
            for j in 0..n {
                if !present[j] {
                    continue;
                }
                let sq: T = xi
                    .iter()
                    .zip(features.row(j).iter())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                row[j] = sq.sqrt();
            }
        });
    out
}

/// Euclidean distance matrix of a modality; categorical features are one-hot
/// encoded first.
pub fn pairwise_euclidean<T: Scalar>(x: &ModalityData<T>) -> Result<SimilarityMatrix<T>> {
    if x.n_present() < 2 {
        return invalid("need at least two present entities");
    }
    let values = euclidean_rows(&x.encoded(), &x.present);
    SimilarityMatrix::new(values, Orientation::Distance, x.present.clone())
}

/// Kernel hyperparameters: bandwidth `mu` and neighbourhood size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub mu: f64,
    pub k_neighbors: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            mu: 0.5,
            k_neighbors: 25,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return invalid("mu must be positive");
        }
        if self.k_neighbors == 0 {
            return invalid("k_neighbors must be positive");
        }
        Ok(())
    }
}

pub const EPSILON_FLOOR: f64 = 1e-12;

/// Scaled exponential affinity `exp(-d^2 / (mu * eps_ij))` where `eps_ij`
/// averages the mean neighbour distance of `i`, that of `j`, and `d(i, j)`.
///
/// Neighbourhoods are taken over present entities only. Values are clamped
/// below at the smallest positive normal so far outliers keep non-zero rows.
pub fn scaled_affinity<T: Scalar>(
    d: &SimilarityMatrix<T>,
    params: &KernelParams,
) -> Result<SimilarityMatrix<T>> {
    params.validate()?;
    if d.orientation() != Orientation::Distance {
        return invalid("scaled_affinity expects a distance matrix");
    }
    if d.n_present() <= params.k_neighbors {
        return invalid(format!(
            "{} present entities cannot supply {} neighbours each",
            d.n_present(),
            params.k_neighbors
        ));
    }
    let knn = KnnStructure::build(d, params.k_neighbors)?;
    let n = d.n();
    let local: Vec<T> = (0..n)
        .map(|i| {
            let nb = knn.neighbors(i);
            if nb.is_empty() {
                return T::nan();
            }
            nb.iter().map(|&j| d.get(i, j)).sum::<T>() / T::of(nb.len() as f64)
        })
        .collect();
    let mu = T::of(params.mu);
    let three = T::of(3.0);
    let floor = T::of(EPSILON_FLOOR);
    let mut values = Array2::from_elem((n, n), T::nan());
    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            if !d.present[i] {
                return;
            }
            for j in 0..n {
                if !d.present[j] {
                    continue;
                }
                let dij = d.get(i, j);
                let eps = ((local[i] + local[j] + dij) / three).max(floor);
                row[j] = (-(dij * dij) / (mu * eps)).exp().max(T::min_positive_value());
            }
        });
    SimilarityMatrix::new(values, Orientation::Affinity, d.present.clone())
}

/// Result of [`zscore`]; `degenerate` flags zero variance (output all zeros).
#[derive(Clone, Debug, PartialEq)]
pub struct ZScore<T> {
    pub matrix: SimilarityMatrix<T>,
    pub degenerate: bool,
}

/// Standardises the defined off-diagonal entries to mean 0, population std 1.
pub fn zscore<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<ZScore<T>> {
    let count = s.off_diagonal().count();
    if count < 1 {
        return invalid("need at least two defined off-diagonal entries");
    }
    // Accumulate in f64: n^2 terms in f32 lose too much.
    let cnt = count as f64;
    let mean = s.off_diagonal().map(Scalar::as_f64).sum::<f64>() / cnt;
    let var = s
        .off_diagonal()
        .map(|v| (v.as_f64() - mean).powi(2))
        .sum::<f64>()
        / cnt;
    let std = var.sqrt();
    let degenerate = !(std > 1e-300) || !std.is_finite();
    let n = s.n();
    let mut values = s.values.clone();
    for i in 0..n {
        for j in 0..n {
            if i == j || !s.is_defined(i, j) {
                continue;
            }
            values[[i, j]] = if degenerate {
                T::zero()
            } else {
                T::of((s.values[[i, j]].as_f64() - mean) / std)
            };
        }
    }
    Ok(ZScore {
        matrix: SimilarityMatrix::new(values, s.orientation, s.present.clone())?,
        degenerate,
    })
}
