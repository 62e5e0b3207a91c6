//! Seeded experiment grids over problems, fusion methods and clusterers.

mod config;
mod runner;
mod summary;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use config::{ExperimentConfig, PartialMode, Plan};
pub use runner::{manifest_path, planned_records, run_experiment, single_modality_baseline, RunManifest};
pub use summary::{problem_order, summarize, write_summary, GroupKey, SummaryRow};

/// Method name used for single-modality baseline rows.
pub fn baseline_method(modality: usize) -> String {
    format!("modality_{modality}")
}

/// One scored clustering; `wall_time` is the only non-deterministic column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub problem: String,
    pub instance: usize,
    pub seed: u64,
    pub partial: PartialMode,
    pub fraction: f64,
    pub method: String,
    pub policy: String,
    pub clusterer: String,
    pub gamma: Option<f64>,
    pub n_clusters: Option<usize>,
    pub ami: Option<f64>,
    pub ari: Option<f64>,
    pub ami_nan: Option<f64>,
    pub modularity: Option<f64>,
    pub tpr: Option<f64>,
    pub assortativity: Option<f64>,
    pub mean_path_length: Option<f64>,
    pub mean_degree: Option<f64>,
    pub median_degree: Option<f64>,
    pub min_degree: Option<usize>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
    pub wall_time: f64,
}

impl ExperimentRecord {
    /// Identity used for resuming.
    pub fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.problem, self.instance, self.partial, self.fraction, self.method, self.policy, self.clusterer
        )
    }

    pub fn is_baseline(&self) -> bool {
        self.method.starts_with("modality_")
    }
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let records = reader.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(records)
}

pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
