//! Similarity integration: five fusion methods and their partial-data variants.
//!
//! Every method returns a [`Fusion`] whose matrix is defined for every pair of
//! entities, ready for KNN sparsification.

mod average;
mod extreme;
mod knn;
mod nemo;
mod snf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mmgen::Dataset;
use crate::simkern::{pairwise_euclidean, scaled_affinity, KernelParams, SimilarityMatrix};
use crate::Scalar;

pub use average::{concat_features, concatenated_features, impute_most_dissimilar, mean_similarity};
pub use extreme::{extreme_mean, threshold_extremes};
pub use knn::KnnStructure;
pub use nemo::{nemo_fuse, relative_similarity};
pub use snf::{diffusion_step, kernel_normalize, knn_normalize, snf_fuse, snf_fuse_observed, SparseRows};

/// Shared fusion hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    pub kernel: KernelParams,
    /// Extreme-mean threshold in standard deviations.
    pub threshold_sigma: f64,
    pub snf_max_iters: usize,
    /// Relative Frobenius change below which diffusion stops.
    pub snf_tol: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            kernel: KernelParams::default(),
            threshold_sigma: 1.0,
            snf_max_iters: 20,
            snf_tol: 1e-6,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.threshold_sigma >= 0.0) {
            return invalid("threshold_sigma must be non-negative");
        }
        if self.snf_max_iters == 0 || !(self.snf_tol > 0.0) {
            return invalid("snf_max_iters and snf_tol must be positive");
        }
        Ok(())
    }
}

/// How entities missing from a modality are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartialPolicy {
    /// Complete data only.
    None,
    /// Missing pairwise values take the modality's most dissimilar value.
    ImputeMaxDistance,
    /// Average only over modalities where both entities are present.
    IgnoreNaN,
    /// Missing feature rows take the per-feature mean.
    FeatureMeanImpute,
    /// NEMO averaging over shared modalities.
    NemoShared,
    /// Extreme-mean thresholding over recorded values only.
    ExtremeShared,
}

impl PartialPolicy {
    pub fn name(self) -> &'static str {
        match self {
            PartialPolicy::None => "none",
            PartialPolicy::ImputeMaxDistance => "impute_max",
            PartialPolicy::IgnoreNaN => "ignore_nan",
            PartialPolicy::FeatureMeanImpute => "feature_mean",
            PartialPolicy::NemoShared => "nemo_shared",
            PartialPolicy::ExtremeShared => "extreme_shared",
        }
    }
}

impl fmt::Display for PartialPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartialPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            PartialPolicy::None,
            PartialPolicy::ImputeMaxDistance,
            PartialPolicy::IgnoreNaN,
            PartialPolicy::FeatureMeanImpute,
            PartialPolicy::NemoShared,
            PartialPolicy::ExtremeShared,
        ]
        .into_iter()
        .find(|p| p.name() == s.to_ascii_lowercase())
        .ok_or_else(|| Error::InvalidArgument(format!("unknown partial policy {s:?}")))
    }
}

/// The five integration methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Concat,
    Mean,
    ExtremeMean,
    Snf,
    Nemo,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Snf,
        Method::Nemo,
        Method::Mean,
        Method::Concat,
        Method::ExtremeMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Concat => "concat",
            Method::Mean => "mean",
            Method::ExtremeMean => "extreme_mean",
            Method::Snf => "snf",
            Method::Nemo => "nemo",
        }
    }

    /// Policies this method accepts.
    pub fn policies(self) -> &'static [PartialPolicy] {
        use PartialPolicy::*;
        match self {
            Method::Concat => &[None, FeatureMeanImpute],
            Method::Mean => &[None, ImputeMaxDistance, IgnoreNaN],
            Method::ExtremeMean => &[None, ExtremeShared],
            Method::Snf => &[None, ImputeMaxDistance],
            Method::Nemo => &[None, NemoShared],
        }
    }

    /// Partial-data strategies evaluated for this method.
    pub fn partial_policies(self) -> &'static [PartialPolicy] {
        use PartialPolicy::*;
        match self {
            Method::Concat => &[FeatureMeanImpute],
            Method::Mean => &[ImputeMaxDistance, IgnoreNaN],
            Method::ExtremeMean => &[ExtremeShared],
            Method::Snf => &[ImputeMaxDistance],
            Method::Nemo => &[NemoShared],
        }
    }

    pub fn check_policy(self, policy: PartialPolicy) -> Result<()> {
        if self.policies().contains(&policy) {
            Ok(())
        } else {
            invalid(format!("{} does not support policy {policy}", self.name()))
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FusionWarning {
    /// A modality's similarities had zero variance and contributed zeros.
    DegenerateModality(usize),
    /// Diffusion hit the iteration cap; `change` is the last relative change.
    NotConverged { iterations: usize, change: f64 },
}

/// A fused, fully defined similarity matrix plus diagnostics.
#[derive(Clone, Debug)]
pub struct Fusion<T> {
    pub matrix: SimilarityMatrix<T>,
    /// Diffusion iterations run (SNF only).
    pub iterations: Option<usize>,
    pub warnings: Vec<FusionWarning>,
}

impl<T> Fusion<T> {
    pub(crate) fn plain(matrix: SimilarityMatrix<T>) -> Self {
        Self {
            matrix,
            iterations: None,
            warnings: Vec::new(),
        }
    }
}

pub(crate) fn check_same_shape<T: Scalar>(mats: &[SimilarityMatrix<T>]) -> Result<()> {
    let Some(first) = mats.first() else {
        return invalid("need at least one modality");
    };
    if mats
        .iter()
        .any(|m| m.n() != first.n() || m.orientation() != first.orientation())
    {
        return invalid("modalities differ in size or orientation");
    }
    Ok(())
}

pub(crate) fn check_every_entity_somewhere<T: Scalar>(mats: &[SimilarityMatrix<T>]) -> Result<()> {
    let n = mats[0].n();
    if let Some(e) = (0..n).find(|&e| mats.iter().all(|m| !m.present()[e])) {
        return invalid(format!("entity {e} is absent from every modality"));
    }
    Ok(())
}

/// Per-modality distances and affinities of a dataset, computed once and
/// shared across methods.
pub struct Prepared<'a, T> {
    pub dataset: &'a Dataset<T>,
    pub distances: Vec<SimilarityMatrix<T>>,
    pub affinities: Vec<SimilarityMatrix<T>>,
}

impl<'a, T: Scalar> Prepared<'a, T> {
    pub fn new(dataset: &'a Dataset<T>, params: &FusionParams) -> Result<Self> {
        params.validate()?;
        let distances: Vec<_> = dataset
            .modalities
            .iter()
            .map(pairwise_euclidean)
            .collect::<Result<_>>()?;
        let affinities = distances
            .iter()
            .map(|d| scaled_affinity(d, &params.kernel))
            .collect::<Result<_>>()?;
        Ok(Self {
            dataset,
            distances,
            affinities,
        })
    }

    /// Fuses with `method`: raw distances feed concatenation and the mean, the
    /// affinity kernel feeds extreme mean, SNF and NEMO.
    pub fn fuse(&self, method: Method, policy: PartialPolicy, params: &FusionParams) -> Result<Fusion<T>> {
        method.check_policy(policy)?;
        match method {
            Method::Concat => Ok(Fusion::plain(concat_features(&self.dataset.modalities, policy)?)),
            Method::Mean => Ok(Fusion::plain(mean_similarity(&self.distances, policy)?)),
            Method::ExtremeMean => extreme_mean(&self.affinities, params, policy),
            Method::Snf => match policy {
                PartialPolicy::ImputeMaxDistance => {
                    let affinities = self
                        .distances
                        .iter()
                        .map(|d| scaled_affinity(&impute_most_dissimilar(d)?, &params.kernel))
                        .collect::<Result<Vec<_>>>()?;
                    snf_fuse(&affinities, params, policy)
                }
                _ => snf_fuse(&self.affinities, params, policy),
            },
            Method::Nemo => nemo_fuse(&self.affinities, params),
        }
    }
}

/// Convenience wrapper around [`Prepared`] for a single method.
pub fn fuse_dataset<T: Scalar>(
    ds: &Dataset<T>,
    method: Method,
    policy: PartialPolicy,
    params: &FusionParams,
) -> Result<Fusion<T>> {
    Prepared::new(ds, params)?.fuse(method, policy, params)
}
