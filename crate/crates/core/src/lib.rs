//! Geodesic-distance manifold learning: exact distance oracles on benchmark
//! manifolds, shortest paths on neighborhood graphs, classical MDS, raw-stress
//! majorization and numerical checks of the graph-distance convergence bounds.

pub mod convergence;
pub mod error;
pub mod frechet;
pub mod geograph;
pub mod io;
pub mod linalg;
pub mod manifolds;
pub mod mds;
pub mod projections;
pub mod types;

pub use error::{Error, Result};
pub use types::{Configuration, DissimilarityMatrix, PointCloud, Seed};
