use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{merge_labels, seeded_rng, split_labels, Dataset, Labels};
use crate::error::{invalid, Result};
use crate::Scalar;

/// Per-entity record of the one modality it is missing from, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialMask {
    absent: Vec<Option<usize>>,
    n_modalities: usize,
}

impl PartialMask {
    pub fn new(absent: Vec<Option<usize>>, n_modalities: usize) -> Result<Self> {
        if absent.iter().flatten().any(|&v| v >= n_modalities) {
            return invalid("mask refers to a modality that does not exist");
        }
        Ok(Self {
            absent,
            n_modalities,
        })
    }

    /// Decodes the total labelling where id `m` marks a complete entity.
    pub fn from_labels(y_nan: &[usize], n_modalities: usize) -> Result<Self> {
        if y_nan.iter().any(|&v| v > n_modalities) {
            return invalid("y_NaN id out of range");
        }
        Ok(Self {
            absent: y_nan
                .iter()
                .map(|&v| (v < n_modalities).then_some(v))
                .collect(),
            n_modalities,
        })
    }

    pub fn absent_from(&self, entity: usize) -> Option<usize> {
        self.absent[entity]
    }

    pub fn n_modalities(&self) -> usize {
        self.n_modalities
    }

    pub fn n_masked(&self) -> usize {
        self.absent.iter().flatten().count()
    }

    /// Total labelling `y_NaN`: the absent modality, or `m` for complete entities.
    pub fn as_labels(&self) -> Vec<usize> {
        self.absent
            .iter()
            .map(|a| a.unwrap_or(self.n_modalities))
            .collect()
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return invalid(format!("fraction {fraction} outside [0, 1]"));
    }
    Ok(())
}

fn apply<T: Scalar>(ds: &Dataset<T>, absent: Vec<Option<usize>>) -> Result<Dataset<T>> {
    let mut out = ds.clone();
    for (e, a) in absent.iter().enumerate() {
        if let Some(v) = *a {
            out.modalities[v].remove(e);
        }
    }
    out.partial_mask = Some(PartialMask::new(absent, ds.n_modalities())?);
    Ok(out)
}

/// Removes `floor(fraction * n)` uniformly chosen entities from one uniformly
/// chosen modality each.
pub fn mask_random<T: Scalar>(ds: &Dataset<T>, fraction: f64, seed: u64) -> Result<Dataset<T>> {
    check_fraction(fraction)?;
    if ds.partial_mask.is_some() {
        return invalid("dataset is already masked");
    }
    let n = ds.n_entities();
    let m = ds.n_modalities();
    let count = (fraction * n as f64).floor() as usize;
    if count == 0 {
        return Ok(ds.clone());
    }
    let mut rng = seeded_rng(seed, 20);
    let mut absent = vec![None; n];
    for e in rand::seq::index::sample(&mut rng, n, count) {
        absent[e] = Some(rng.random_range(0..m));
    }
    apply(ds, absent)
}

/// Removes entities from modalities according to their ground-truth cluster.
///
/// The truth is merged (fewer modalities than clusters), split (more) or
/// reused (equal) into one group per modality; within group `v`,
/// `floor(fraction * |group|)` random members lose modality `v`.
pub fn mask_cluster<T: Scalar>(ds: &Dataset<T>, fraction: f64, seed: u64) -> Result<Dataset<T>> {
    check_fraction(fraction)?;
    if ds.partial_mask.is_some() {
        return invalid("dataset is already masked");
    }
    let m = ds.n_modalities();
    let groups = cluster_groups(&ds.truth, m, seed)?;
    let mut rng = seeded_rng(seed, 21);
    let mut absent = vec![None; ds.n_entities()];
    let mut any = false;
    for (v, mut members) in groups.members().into_iter().enumerate() {
        let count = (fraction * members.len() as f64).floor() as usize;
        members.shuffle(&mut rng);
        for &e in &members[..count] {
            absent[e] = Some(v);
            any = true;
        }
    }
    if !any {
        return Ok(ds.clone());
    }
    apply(ds, absent)
}

fn cluster_groups(truth: &Labels, m: usize, seed: u64) -> Result<Labels> {
    let k = truth.n_clusters();
    match m.cmp(&k) {
        std::cmp::Ordering::Less => merge_labels(truth, m, seed),
        std::cmp::Ordering::Greater => split_labels(truth, m, seed),
        std::cmp::Ordering::Equal => Ok(truth.clone()),
    }
}
