//! Synthetic multi-modal data: ground-truth labels, per-modality cluster
//! transforms, feature generators, partial-data masks and the problem registry.

mod generate;
pub mod io;
mod labels;
mod mask;
mod problems;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Scalar;

pub use generate::{
    gen_categorical, gen_gaussian, gen_student_t, sample_categorical, CategoricalBackground,
    FeatureTable,
};
pub use labels::{gen_labels, merge_labels, random_labels, split_labels, Labels};
pub use mask::{mask_cluster, mask_random, PartialMask};
pub use problems::{build_problem, Problem, ProblemShape};

/// Independent, reproducible random stream for `(seed, stream)`.
pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    Gaussian,
    StudentT,
    Categorical,
}

impl Distribution {
    pub fn code(self) -> char {
        match self {
            Distribution::Gaussian => 'G',
            Distribution::StudentT => 'S',
            Distribution::Categorical => 'C',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterTransform {
    Unchanged,
    Merged,
    Split,
    Random,
}

impl ClusterTransform {
    pub fn code(self) -> u8 {
        match self {
            ClusterTransform::Unchanged => 0,
            ClusterTransform::Merged => 1,
            ClusterTransform::Split => 2,
            ClusterTransform::Random => 3,
        }
    }
}

/// How one modality is derived from the ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalitySpec {
    pub distribution: Distribution,
    pub cluster_transform: ClusterTransform,
    pub n_features: usize,
    /// Cluster count after the transform; ignored for `Unchanged`.
    pub transform_target: usize,
}

impl ModalitySpec {
    /// Table code such as `G-0` or `S-3`.
    pub fn code(&self) -> String {
        format!(
            "{}-{}",
            self.distribution.code(),
            self.cluster_transform.code()
        )
    }

    /// Derives the modality labels `y_i` from the ground truth.
    pub fn transform(&self, truth: &Labels, seed: u64) -> Result<Labels> {
        let k = truth.n_clusters();
        match self.cluster_transform {
            ClusterTransform::Unchanged => Ok(truth.clone()),
            ClusterTransform::Merged => {
                if self.transform_target >= k {
                    return invalid(format!(
                        "merge target {} must be below {k}",
                        self.transform_target
                    ));
                }
                merge_labels(truth, self.transform_target, seed)
            }
            ClusterTransform::Split => {
                if self.transform_target <= k {
                    return invalid(format!(
                        "split target {} must exceed {k}",
                        self.transform_target
                    ));
                }
                split_labels(truth, self.transform_target, seed)
            }
            ClusterTransform::Random => random_labels(truth.len(), self.transform_target, seed),
        }
    }
}

/// Generator hyperparameters shared by all modalities of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    /// Standard deviation of cluster-centre coordinates.
    pub center_scale: f64,
    pub student_t_dof: f64,
    pub cat_n_categories: usize,
    pub cat_informative_fraction: f64,
    /// Symmetric Dirichlet concentration of per-cluster category distributions.
    pub cat_informative_alpha: f64,
    /// Symmetric Dirichlet concentration of the shared background distribution.
    pub cat_background_alpha: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            center_scale: 0.6,
            student_t_dof: 2.0,
            cat_n_categories: 4,
            cat_informative_fraction: 0.3,
            cat_informative_alpha: 0.5,
            cat_background_alpha: 5.0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_scale >= 0.0 && self.center_scale.is_finite()) {
            return invalid("center_scale must be finite and non-negative");
        }
        if !(self.student_t_dof > 0.0) {
            return invalid("student_t_dof must be positive");
        }
        if self.cat_n_categories < 2 {
            return invalid("cat_n_categories must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.cat_informative_fraction) {
            return invalid("cat_informative_fraction must lie in [0, 1]");
        }
        if !(self.cat_informative_alpha > 0.0 && self.cat_background_alpha > 0.0) {
            return invalid("Dirichlet concentrations must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    /// Values are category indices in `0..n_categories`.
    Categorical { n_categories: usize },
}

/// One modality: an `n x d` feature block plus entity presence.
///
/// Rows of absent entities hold `NaN` and never enter distance computations.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalityData<T> {
    pub features: Array2<T>,
    pub present: Vec<bool>,
    pub labels: Labels,
    pub kind: FeatureKind,
}

impl<T: Scalar> ModalityData<T> {
    pub fn n_entities(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// Marks `entity` absent and wipes its row.
    pub fn remove(&mut self, entity: usize) {
        self.present[entity] = false;
        self.features.row_mut(entity).fill(T::nan());
    }

    /// Feature block as used by distance computations: categorical
    /// modalities are one-hot encoded, continuous ones are returned as is.
    pub fn encoded(&self) -> Array2<T> {
        match self.kind {
            FeatureKind::Continuous => self.features.clone(),
            FeatureKind::Categorical { n_categories } => {
                let (n, d) = self.features.dim();
                let mut out = Array2::zeros((n, d * n_categories));
                for e in 0..n {
                    if !self.present[e] {
                        out.row_mut(e).fill(T::nan());
                        continue;
                    }
                    for f in 0..d {
                        let c = self.features[[e, f]].to_usize().unwrap_or(0);
                        out[[e, f * n_categories + c.min(n_categories - 1)]] = T::one();
                    }
                }
                out
            }
        }
    }
}

/// A generated multi-modal instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub modalities: Vec<ModalityData<T>>,
    pub specs: Vec<ModalitySpec>,
    pub truth: Labels,
    pub partial_mask: Option<PartialMask>,
    pub rng_seed: u64,
    pub problem: Option<String>,
    pub params: GenParams,
}

impl<T: Scalar> Dataset<T> {
    pub fn n_entities(&self) -> usize {
        self.truth.len()
    }

    pub fn n_modalities(&self) -> usize {
        self.modalities.len()
    }

    /// Checks the cross-modality invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_entities();
        if self.modalities.iter().any(|m| m.n_entities() != n || m.present.len() != n) {
            return invalid("modalities disagree on entity count");
        }
        for e in 0..n {
            let absent: Vec<usize> = (0..self.n_modalities())
                .filter(|&v| !self.modalities[v].present[e])
                .collect();
            let expected = self
                .partial_mask
                .as_ref()
                .and_then(|m| m.absent_from(e));
            match (absent.as_slice(), expected) {
                ([], None) => {}
                ([v], Some(x)) if *v == x => {}
                _ => {
                    return invalid(format!(
                        "entity {e} absent from {absent:?}, mask says {expected:?}"
                    ))
                }
            }
        }
        Ok(())
    }
}
