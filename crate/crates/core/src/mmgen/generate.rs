use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal, StudentT};

use super::{seeded_rng, FeatureKind, GenParams, Labels, ModalityData};
use crate::error::{invalid, Result};
use crate::Scalar;

const CENTER_STREAM: u64 = 10;
const NOISE_STREAM: u64 = 11;
const CATEGORY_STREAM: u64 = 12;

/// Cluster centres used by the continuous generators for `(k, d, seed)`:
/// coordinates are i.i.d. `N(0, center_scale^2)`.
pub fn cluster_centers(k: usize, d: usize, center_scale: f64, seed: u64) -> Array2<f64> {
    let mut rng = seeded_rng(seed, CENTER_STREAM);
    Array2::from_shape_simple_fn((k, d), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * center_scale
    })
}

fn continuous<T: Scalar>(
    y: &Labels,
    d: usize,
    params: &GenParams,
    seed: u64,
    mut noise: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> f64,
) -> Result<ModalityData<T>> {
    if d == 0 {
        return invalid("modality needs at least one feature");
    }
    params.validate()?;
    let centers = cluster_centers(y.n_clusters(), d, params.center_scale, seed);
    let mut rng = seeded_rng(seed, NOISE_STREAM);
    let mut features = Array2::zeros((y.len(), d));
    for (e, mut row) in features.rows_mut().into_iter().enumerate() {
        let c = centers.row(y.get(e));
        for (x, &mu) in row.iter_mut().zip(c.iter()) {
            *x = T::of(mu + noise(&mut rng));
        }
    }
    Ok(ModalityData {
        features,
        present: vec![true; y.len()],
        labels: y.clone(),
        kind: FeatureKind::Continuous,
    })
}

/// Gaussian mixture with identity covariance around the cluster centres.
pub fn gen_gaussian<T: Scalar>(
    y: &Labels,
    d: usize,
    params: &GenParams,
    seed: u64,
) -> Result<ModalityData<T>> {
    continuous(y, d, params, seed, |rng| StandardNormal.sample(rng))
}

/// Mixture of Student's-t distributions (independent coordinates, identity
/// scale) around the cluster centres.
pub fn gen_student_t<T: Scalar>(
    y: &Labels,
    d: usize,
    params: &GenParams,
    seed: u64,
) -> Result<ModalityData<T>> {
    let t = StudentT::new(params.student_t_dof)
        .map_err(|e| crate::Error::InvalidArgument(format!("student-t: {e}")))?;
    continuous(y, d, params, seed, |rng| t.sample(rng))
}

/// Category distribution of one categorical feature.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureTable {
    /// One distribution per cluster id.
    Informative(Vec<Vec<f64>>),
    /// One distribution for every entity.
    Shared(Vec<f64>),
}

/// Shared uninformative distributions, one per feature slot, drawn once per
/// dataset so that uninformative features look alike across modalities.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalBackground {
    pub distributions: Vec<Vec<f64>>,
}

impl CategoricalBackground {
    pub fn draw(d: usize, params: &GenParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = seeded_rng(seed, CATEGORY_STREAM + 1);
        let distributions = (0..d)
            .map(|_| dirichlet(params.cat_n_categories, params.cat_background_alpha, &mut rng))
            .collect();
        Ok(Self { distributions })
    }
}

fn dirichlet(k: usize, alpha: f64, rng: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|g| g / total).collect();
        }
    }
}

/// Categorical modality mixing informative and uninformative features.
///
/// `round(cat_informative_fraction * d)` randomly chosen features get an
/// independent Dirichlet-distributed category distribution per cluster; the
/// rest sample from the dataset-wide `background`.
pub fn gen_categorical<T: Scalar>(
    y: &Labels,
    d: usize,
    params: &GenParams,
    background: &CategoricalBackground,
    seed: u64,
) -> Result<ModalityData<T>> {
    params.validate()?;
    if background.distributions.len() < d {
        return invalid(format!(
            "background covers {} features, modality needs {d}",
            background.distributions.len()
        ));
    }
    let mut rng = seeded_rng(seed, CATEGORY_STREAM);
    let n_informative = (params.cat_informative_fraction * d as f64).round() as usize;
    let mut informative = vec![false; d];
    for f in rand::seq::index::sample(&mut rng, d, n_informative) {
        informative[f] = true;
    }
    let tables: Vec<FeatureTable> = (0..d)
        .map(|f| {
            if informative[f] {
                FeatureTable::Informative(
                    (0..y.n_clusters())
                        .map(|_| {
                            dirichlet(params.cat_n_categories, params.cat_informative_alpha, &mut rng)
                        })
                        .collect(),
                )
            } else {
                FeatureTable::Shared(background.distributions[f].clone())
            }
        })
        .collect();
    sample_categorical(y, &tables, seed)
}

/// Samples category indices feature by feature from explicit tables.
pub fn sample_categorical<T: Scalar>(
    y: &Labels,
    tables: &[FeatureTable],
    seed: u64,
) -> Result<ModalityData<T>> {
    if tables.is_empty() {
        return invalid("modality needs at least one feature");
    }
    let width = |t: &FeatureTable| match t {
        FeatureTable::Informative(per) => per.first().map_or(0, Vec::len),
        FeatureTable::Shared(p) => p.len(),
    };
    let n_categories = width(&tables[0]);
    if n_categories < 2 || tables.iter().any(|t| width(t) != n_categories) {
        return invalid("every feature needs the same number (>= 2) of categories");
    }
    let samplers: Vec<Vec<WeightedIndex<f64>>> = tables
        .iter()
        .map(|t| {
            let rows: Vec<&Vec<f64>> = match t {
                FeatureTable::Informative(per) => {
                    if per.len() != y.n_clusters() {
                        return invalid("informative table needs one row per cluster");
                    }
                    per.iter().collect()
                }
                FeatureTable::Shared(p) => vec![p],
            };
            rows.into_iter()
                .map(|p| {
                    WeightedIndex::new(p)
                        .map_err(|e| crate::Error::InvalidArgument(format!("category weights: {e}")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rng = seeded_rng(seed, CATEGORY_STREAM + 2);
    let mut features = Array2::zeros((y.len(), tables.len()));
    for e in 0..y.len() {
        for (f, s) in samplers.iter().enumerate() {
            let sampler = if s.len() == 1 { &s[0] } else { &s[y.get(e)] };
            features[[e, f]] = T::of(sampler.sample(&mut rng) as f64);
        }
    }
    Ok(ModalityData {
        features,
        present: vec![true; y.len()],
        labels: y.clone(),
        kind: FeatureKind::Categorical { n_categories },
    })
}
