use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterParams, Clusterer};
use crate::error::{Error, Result};
use crate::integrate::{FusionParams, Method, PartialPolicy};
use crate::mmgen::{GenParams, Problem, ProblemShape};
use crate::simkern::KernelParams;

/// How entities are removed before fusion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialMode {
    #[default]
    None,
    Random,
    Cluster,
}

impl PartialMode {
    pub fn name(self) -> &'static str {
        match self {
            PartialMode::None => "none",
            PartialMode::Random => "random",
            PartialMode::Cluster => "cluster",
        }
    }
}

impl fmt::Display for PartialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PartialMode::None),
            "random" => Ok(PartialMode::Random),
            "cluster" => Ok(PartialMode::Cluster),
            _ => Err(Error::Config(format!("unknown partial mode {s:?}"))),
        }
    }
}

/// Experiment grid, read from TOML.
///
/// `problems` takes registry names or `"all"` / `"partial"`; `policies` takes
/// policy names or `"all"` / `"partial"` (each method's own strategies).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<String>,
    pub n_instances: usize,
    pub methods: Vec<String>,
    pub policies: Vec<String>,
    pub clusterers: Vec<String>,
    pub partial: PartialMode,
    pub fractions: Vec<f64>,
    pub base_seed: u64,
    /// CSV destination; `None` keeps records in memory only.
    pub output: Option<PathBuf>,
    /// Skip keys already present in `output`.
    pub resume: bool,
    /// Also score each modality on its own (unmasked runs only).
    pub baselines: bool,
    /// Neighbours per node in the KNN network.
    pub knn_k: usize,
    pub shape: ProblemShape,
    pub generator: GenParams,
    pub fusion: FusionParams,
    pub clustering: ClusterParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// 500 entities, 10 instances, K = 15 for both the kernel and the network.
    pub fn desk() -> Self {
        Self {
            problems: vec!["all".into()],
            n_instances: 10,
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            policies: vec!["none".into()],
            clusterers: Clusterer::ALL.iter().map(|c| c.name().to_string()).collect(),
            partial: PartialMode::None,
            fractions: vec![0.0],
            base_seed: 0,
            output: None,
            resume: false,
            baselines: false,
            knn_k: 15,
            shape: ProblemShape::desk(),
            generator: GenParams::default(),
            fusion: FusionParams {
                kernel: KernelParams {
                    k_neighbors: 15,
                    ..KernelParams::default()
                },
                ..FusionParams::default()
            },
            clustering: ClusterParams::default(),
        }
    }

    /// 2500 entities, 50 features, 20 instances, K = 25.
    pub fn full() -> Self {
        let mut cfg = Self::desk();
        cfg.shape = ProblemShape::full();
        cfg.n_instances = 20;
        cfg.knn_k = 25;
        cfg.fusion.kernel.k_neighbors = 25;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses names and checks ranges; every failure is a config error.
    pub fn resolve(&self) -> Result<Plan> {
        let cfg_err = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        if self.n_instances == 0 {
            return Err(Error::Config("n_instances must be at least 1".into()));
        }
        if self.fractions.is_empty() || self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("fractions must be a non-empty subset of [0, 1]".into()));
        }
        let fractions = match self.partial {
            PartialMode::None => vec![0.0],
            _ => self.fractions.clone(),
        };
        let mut problems = Vec::new();
        for p in &self.problems {
            match p.trim().to_ascii_lowercase().as_str() {
                "all" => problems.extend(Problem::ALL),
                "partial" => problems.extend(Problem::PARTIAL),
                _ => problems.push(p.parse::<Problem>().map_err(cfg_err)?),
            }
        }
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(cfg_err))
            .collect::<Result<Vec<_>>>()?;
        let clusterers = self
            .clusterers
            .iter()
            .map(|c| c.parse::<Clusterer>().map_err(cfg_err))
            .collect::<Result<Vec<_>>>()?;
        let mut runs = Vec::new();
        for &method in &methods {
            for p in &self.policies {
                let chosen: Vec<PartialPolicy> = match p.trim().to_ascii_lowercase().as_str() {
                    "all" => method.policies().to_vec(),
                    "partial" => method.partial_policies().to_vec(),
                    _ => {
                        let policy = p.parse::<PartialPolicy>().map_err(cfg_err)?;
                        if method.check_policy(policy).is_ok() {
                            vec![policy]
                        } else {
                            vec![]
                        }
                    }
                };
                for policy in chosen {
                    if !runs.contains(&(method, policy)) {
                        runs.push((method, policy));
                    }
                }
            }
        }
        if problems.is_empty() || clusterers.is_empty() || (runs.is_empty() && !self.baselines) {
            return Err(Error::Config(
                "config selects no problems, clusterers or method/policy pairs".into(),
            ));
        }
        if self.knn_k == 0 || self.knn_k >= self.shape.n_entities {
            return Err(Error::Config(format!(
                "knn_k must lie in 1..{}",
                self.shape.n_entities
            )));
        }
        self.generator.validate().map_err(cfg_err)?;
        self.fusion.validate().map_err(cfg_err)?;
        let mut clustering = self.clustering.clone();
        clustering.spectral_k = self.shape.n_clusters.max(2);
        clustering.validate().map_err(cfg_err)?;
        Ok(Plan {
            problems,
            runs,
            clusterers,
            fractions,
            clustering,
        })
    }
}

/// A config with every name parsed.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub problems: Vec<Problem>,
    pub runs: Vec<(Method, PartialPolicy)>,
    pub clusterers: Vec<Clusterer>,
    pub fractions: Vec<f64>,
    pub clustering: ClusterParams,
}
