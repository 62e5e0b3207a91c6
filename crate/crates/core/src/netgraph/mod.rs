//! KNN networks and the structural statistics used to compare them.

mod graph;
pub mod io;
mod stats;

pub use graph::{knn_graph, Graph};
pub use stats::{
    assortativity, degree_stats, graph_stats, mean_path_length, modularity, tpr, GraphStats,
};
