//! Adaptive graph encoder: a Laplacian smoothing filter followed by a linear
//! encoder trained on node pairs it selects from its own similarity ranking,
//! with clustering and link-prediction evaluation.

pub mod cli;
pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod filter;
pub mod graph;
pub mod pipeline;
pub mod sparse;
pub mod spectral;
pub mod variants;

pub use error::{AgeError, Result};
pub use graph::{build_graph, laplacians, Graph, LaplacianBundle};
pub use sparse::SparseMatrix;
