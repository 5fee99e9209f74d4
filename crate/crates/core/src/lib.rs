//! Semi-random graph partitioning: planted instances, ℓ²₂ SDP relaxations,
//! hidden solution sparsification and the rounding pipelines built on it.

pub mod embeddings;
pub mod error;
pub mod expander;
pub mod graph;
pub mod instances;
pub mod recover;
pub mod rng;
pub mod solvers;
pub mod sparsify;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeSet, Graph, Partition, VertexSet};
