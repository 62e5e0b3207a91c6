//! Multi-modal similarity integration toolkit.
//!
//! The crate covers the whole pipeline used to compare similarity
//! integration methods on synthetic multi-modal data:
//!
//! * [`mmgen`] generates datasets with per-modality cluster structure,
//!   feature distributions and partial-data masks,
//! * [`simkern`] computes pairwise distances and the scaled exponential
//!   affinity kernel,
//! * [`integrate`] fuses per-modality information into one similarity matrix
//!   (concatenation, mean, extreme mean, SNF, NEMO and their partial-data
//!   variants),
//! * [`netgraph`] sparsifies a fused matrix into a KNN network and measures it,
//! * [`cluster`] runs Leiden and random-walk spectral clustering,
//! * [`evalmetrics`] scores partitions with AMI and ARI,
//! * [`bench`] ties everything into seeded, resumable experiment grids.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar type for the common case.

pub mod bench;
pub mod cluster;
pub mod error;
pub mod evalmetrics;
pub mod integrate;
pub mod mmgen;
pub mod netgraph;
mod scalar;
pub mod simkern;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use mmgen::Labels;

/// Similarity matrix over `f64`.
pub type SimilarityMatrix = simkern::SimilarityMatrix<f64>;
/// Similarity matrix over `f32`.
pub type SimilarityMatrixF32 = simkern::SimilarityMatrix<f32>;
/// Modality feature block over `f64`.
pub type ModalityData = mmgen::ModalityData<f64>;
/// Modality feature block over `f32`.
pub type ModalityDataF32 = mmgen::ModalityData<f32>;
/// Multi-modal dataset over `f64`.
pub type Dataset = mmgen::Dataset<f64>;
/// Multi-modal dataset over `f32`.
pub type DatasetF32 = mmgen::Dataset<f32>;
/// KNN network with `f64` edge weights.
pub type Graph = netgraph::Graph<f64>;
/// Fusion output over `f64`.
pub type Fusion = integrate::Fusion<f64>;
