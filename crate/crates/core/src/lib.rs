//! Biharmonic distance (BD) queries on undirected graphs.
//!
//! The squared biharmonic distance between two nodes is
//! `β(s,t) = ‖L†(e_s − e_t)‖²` where `L†` is the Laplacian pseudoinverse.
//! This crate answers pairwise and nodal BD queries with:
//!
//! * [`exact`]: a dense pseudoinverse oracle for small graphs,
//! * [`push`]: deterministic truncated propagation (`Push`, `Push+`),
//! * [`rwalk`]: random-walk estimators (`STW`, and `SWF` with
//!   empirical-Bernstein early stopping),
//! * [`nodal`]: nodal queries built on `SWF` (`SNB`, `SNB+`).
//!
//! The approximate methods need the spectral quantities estimated in
//! [`spectral`]. Sampling work is spread over rayon workers when the
//! `parallel` feature is on; see [`par`].

pub mod error;
pub mod estimate;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod nodal;
pub mod par;
pub mod push;
pub mod rwalk;
pub mod seed;
pub mod spectral;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use estimate::{Estimate, Method};
pub use exact::DenseOracle;
pub use graph::{EdgeList, Graph};
pub use nodal::NodalEstimate;
pub use par::Execution;
pub use push::{ResidualVector, TruncationParams};
pub use rwalk::{EstimatorState, SamplingConfig, Walk};
pub use spectral::{SpectralConfig, SpectralInfo};
