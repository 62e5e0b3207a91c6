use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    gen_categorical, gen_gaussian, gen_labels, gen_student_t, seeded_rng, CategoricalBackground,
    ClusterTransform, Dataset, Distribution, GenParams, ModalitySpec,
};
use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// The fifteen three-modality benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Problem {
    Cat,
    Easy,
    SingleMerged,
    SingleNoisy,
    Split,
    MixedNormal,
    Merged,
    MixedAll,
    Noisy,
    OneRand,
    MixedNoisy,
    MixedOneRand,
    NoisyOneRand,
    MixedNoisyOneRand,
    TwoRand,
}

impl Problem {
    pub const ALL: [Problem; 15] = [
        Problem::Cat,
        Problem::Easy,
        Problem::SingleMerged,
        Problem::SingleNoisy,
        Problem::Split,
        Problem::MixedNormal,
        Problem::Merged,
        Problem::MixedAll,
        Problem::Noisy,
        Problem::OneRand,
        Problem::MixedNoisy,
        Problem::MixedOneRand,
        Problem::NoisyOneRand,
        Problem::MixedNoisyOneRand,
        Problem::TwoRand,
    ];

    /// Problems used for the partial-data experiments.
    pub const PARTIAL: [Problem; 5] = [
        Problem::Easy,
        Problem::MixedNormal,
        Problem::OneRand,
        Problem::Noisy,
        Problem::MixedNoisyOneRand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Cat => "Cat",
            Problem::Easy => "Easy",
            Problem::SingleMerged => "Single Merged",
            Problem::SingleNoisy => "Single Noisy",
            Problem::Split => "Split",
            Problem::MixedNormal => "Mixed Normal",
            Problem::Merged => "Merged",
            Problem::MixedAll => "Mixed All",
            Problem::Noisy => "Noisy",
            Problem::OneRand => "1Rand",
            Problem::MixedNoisy => "Mixed Noisy",
            Problem::MixedOneRand => "Mixed 1Rand",
            Problem::NoisyOneRand => "Noisy 1Rand",
            Problem::MixedNoisyOneRand => "Mixed Noisy 1Rand",
            Problem::TwoRand => "2Rand",
        }
    }

    /// Distribution and cluster-transform code of each modality.
    pub fn codes(self) -> [(Distribution, ClusterTransform); 3] {
        use ClusterTransform::*;
        use Distribution::*;
        match self {
            Problem::Cat => [(Categorical, Unchanged); 3],
            Problem::Easy => [(Gaussian, Unchanged); 3],
            Problem::SingleMerged => [(Gaussian, Unchanged), (Gaussian, Unchanged), (Gaussian, Merged)],
            Problem::SingleNoisy => [(Gaussian, Unchanged), (Gaussian, Unchanged), (StudentT, Unchanged)],
            Problem::Split => [(Gaussian, Split); 3],
            Problem::MixedNormal => [(Gaussian, Merged), (Gaussian, Merged), (Gaussian, Split)],
            Problem::Merged => [(Gaussian, Merged); 3],
            Problem::MixedAll => [(Categorical, Merged), (Gaussian, Merged), (StudentT, Split)],
            Problem::Noisy => [(StudentT, Unchanged); 3],
            Problem::OneRand => [(Gaussian, Unchanged), (Gaussian, Unchanged), (Gaussian, Random)],
            Problem::MixedNoisy => [(StudentT, Merged), (StudentT, Merged), (StudentT, Split)],
            Problem::MixedOneRand => [(Gaussian, Merged), (Gaussian, Split), (Gaussian, Random)],
            Problem::NoisyOneRand => [(StudentT, Unchanged), (StudentT, Unchanged), (StudentT, Random)],
            Problem::MixedNoisyOneRand => [(StudentT, Merged), (StudentT, Split), (StudentT, Random)],
            Problem::TwoRand => [(Gaussian, Unchanged), (Gaussian, Random), (Gaussian, Random)],
        }
    }

    pub fn specs(self, shape: &ProblemShape) -> Vec<ModalitySpec> {
        self.codes()
            .iter()
            .map(|&(distribution, cluster_transform)| ModalitySpec {
                distribution,
                cluster_transform,
                n_features: shape.n_features,
                transform_target: match cluster_transform {
                    ClusterTransform::Unchanged => shape.n_clusters,
                    ClusterTransform::Merged => shape.merge_target,
                    ClusterTransform::Split => shape.split_target,
                    ClusterTransform::Random => shape.random_clusters,
                },
            })
            .collect()
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = |x: &str| x.to_ascii_lowercase().replace([' ', '_', '-'], "");
        Problem::ALL
            .into_iter()
            .find(|p| key(p.name()) == key(s) || key(&format!("{p:?}")) == key(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem {s:?}")))
    }
}

/// Size parameters shared by every problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemShape {
    pub n_entities: usize,
    pub n_clusters: usize,
    pub n_features: usize,
    pub merge_target: usize,
    pub split_target: usize,
    pub random_clusters: usize,
}

impl ProblemShape {
    /// 500 entities, 30 features per modality.
    pub fn desk() -> Self {
        Self {
            n_entities: 500,
            n_clusters: 10,
            n_features: 30,
            merge_target: 5,
            split_target: 20,
            random_clusters: 10,
        }
    }

    /// 2500 entities, 50 features per modality.
    pub fn full() -> Self {
        Self {
            n_entities: 2500,
            n_features: 50,
            ..Self::desk()
        }
    }
}

impl Default for ProblemShape {
    fn default() -> Self {
        Self::desk()
    }
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seeded_rng(seed, 100 + tag).next_u64()
}

/// Generates a registry problem instance.
pub fn build_problem<T: Scalar>(
    problem: Problem,
    shape: &ProblemShape,
    params: &GenParams,
    seed: u64,
) -> Result<Dataset<T>> {
    let mut ds = build_dataset(&problem.specs(shape), shape.n_entities, shape.n_clusters, params, seed)?;
    ds.problem = Some(problem.name().to_string());
    Ok(ds)
}

/// Generates a dataset for arbitrary modality specifications.
pub fn build_dataset<T: Scalar>(
    specs: &[ModalitySpec],
    n: usize,
    n_clusters: usize,
    params: &GenParams,
    seed: u64,
) -> Result<Dataset<T>> {
    params.validate()?;
    if specs.is_empty() {
        return invalid("dataset needs at least one modality");
    }
    let truth = gen_labels(n, n_clusters, sub_seed(seed, 0))?;
    let widest = specs.iter().map(|s| s.n_features).max().unwrap_or(0);
    let background = CategoricalBackground::draw(widest, params, sub_seed(seed, 1))?;
    let modalities = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let i = i as u64;
            let y_i = spec.transform(&truth, sub_seed(seed, 10 + 2 * i))?;
            let data_seed = sub_seed(seed, 11 + 2 * i);
            let d = spec.n_features;
            match spec.distribution {
                Distribution::Gaussian => gen_gaussian(&y_i, d, params, data_seed),
                Distribution::StudentT => gen_student_t(&y_i, d, params, data_seed),
                Distribution::Categorical => gen_categorical(&y_i, d, params, &background, data_seed),
            }
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        modalities,
        specs: specs.to_vec(),
        truth,
        partial_mask: None,
        rng_seed: seed,
        problem: None,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_codes() {
        let codes = |p: Problem| {
            p.specs(&ProblemShape::full())
                .iter()
                .map(ModalitySpec::code)
                .collect::<Vec<_>>()
                .join(",")
        };
        assert_eq!(codes(Problem::Easy), "G-0,G-0,G-0");
        assert_eq!(codes(Problem::MixedNoisyOneRand), "S-1,S-2,S-3");
        assert_eq!(codes(Problem::TwoRand), "G-0,G-3,G-3");
        assert_eq!(codes(Problem::MixedAll), "C-1,G-1,S-2");
        assert_eq!(codes(Problem::Cat), "C-0,C-0,C-0");
    }

    #[test]
    fn names_parse() {
        for p in Problem::ALL {
            assert_eq!(p.name().parse::<Problem>().unwrap(), p);
        }
        assert_eq!("mixed_noisy_1rand".parse::<Problem>().unwrap(), Problem::MixedNoisyOneRand);
        assert!("Hard".parse::<Problem>().is_err());
    }

    #[test]
    fn full_shape_dimensions() {
        let ds: Dataset<f32> =
            build_problem(Problem::MixedAll, &ProblemShape::full(), &GenParams::default(), 1).unwrap();
        assert_eq!(ds.n_modalities(), 3);
        assert_eq!(ds.truth.sizes(), vec![250; 10]);
        for (m, k) in ds.modalities.iter().zip([5, 5, 20]) {
            assert_eq!(m.features.dim(), (2500, 50));
            assert_eq!(m.labels.n_clusters(), k);
        }
        ds.validate().unwrap();
    }

    #[test]
    fn generation_is_reproducible() {
        let shape = ProblemShape {
            n_entities: 80,
            n_features: 5,
            ..ProblemShape::desk()
        };
        let a: Dataset<f64> = build_problem(Problem::MixedAll, &shape, &GenParams::default(), 17).unwrap();
        let b: Dataset<f64> = build_problem(Problem::MixedAll, &shape, &GenParams::default(), 17).unwrap();
        assert_eq!(a, b);
        let c: Dataset<f64> = build_problem(Problem::MixedAll, &shape, &GenParams::default(), 18).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn random_modality_labels_differ_from_truth() {
        let ds: Dataset<f64> =
            build_problem(Problem::TwoRand, &ProblemShape::desk(), &GenParams::default(), 0).unwrap();
        assert_eq!(ds.modalities[0].labels, ds.truth);
        assert_ne!(ds.modalities[1].labels, ds.truth);
        assert_ne!(ds.modalities[1].labels, ds.modalities[2].labels);
    }
}
