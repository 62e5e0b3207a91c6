//! Community detection on KNN networks.

mod kmeans;
mod leiden;
mod spectral;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::netgraph::Graph;
use crate::{Labels, Scalar};

pub use kmeans::kmeans;
pub use leiden::{leiden, leiden_from, select_resolution};
pub use spectral::{rw_eigen, spectral_rw};

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub resolution_grid: Vec<f64>,
    /// k-means restarts for spectral clustering.
    pub n_restarts: usize,
    pub spectral_k: usize,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            resolution_grid: log_grid(0.5, 2.0, 15),
            n_restarts: 10,
            spectral_k: 10,
            seed: 0,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.resolution_grid.is_empty() || self.resolution_grid.iter().any(|&g| !(g > 0.0)) {
            return invalid("resolution grid must be non-empty and positive");
        }
        if self.n_restarts == 0 {
            return invalid("n_restarts must be positive");
        }
        if self.spectral_k < 2 {
            return invalid("spectral_k must be at least 2");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clusterer {
    Leiden,
    Spectral,
}

impl Clusterer {
    pub const ALL: [Clusterer; 2] = [Clusterer::Leiden, Clusterer::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Clusterer::Leiden => "leiden",
            Clusterer::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Clusterer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Clusterer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Clusterer::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown clusterer `{s}`")))
    }
}

/// Partition plus the resolution Leiden settled on.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub labels: Labels,
    pub gamma: Option<f64>,
}

/// Leiden goes through resolution selection; spectral uses `params.spectral_k`.
pub fn run_clusterer<T: Scalar>(g: &Graph<T>, clusterer: Clusterer, params: &ClusterParams) -> Result<Clustering> {
    params.validate()?;
    match clusterer {
        Clusterer::Leiden => {
            let (gamma, labels) = select_resolution(g, params)?;
            Ok(Clustering {
                labels,
                gamma: Some(gamma),
            })
        }
        Clusterer::Spectral => Ok(Clustering {
            labels: spectral_rw(g, params.spectral_k, params)?,
            gamma: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = ClusterParams::default().resolution_grid;
        assert_eq!(g.len(), 15);
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[14] - 2.0).abs() < 1e-12);
        assert!((g[7] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn params_validation() {
        let mut p = ClusterParams::default();
        assert!(p.validate().is_ok());
        p.spectral_k = 1;
        assert!(p.validate().is_err());
        p = ClusterParams {
            resolution_grid: vec![],
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn clusterer_names() {
        for c in Clusterer::ALL {
            assert_eq!(c.name().parse::<Clusterer>().unwrap(), c);
        }
        assert!("sbm".parse::<Clusterer>().is_err());
    }
}
