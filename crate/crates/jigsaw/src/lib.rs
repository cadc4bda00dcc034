//! Jigsaw percolation laboratory.
//!
//! Clusters of a deterministic *puzzle graph* merge over discrete time using
//! connectivity evidence from a random *people graph* sampled lazily with a
//! seeded pair function. The crate provides the graph families, the sampler,
//! the merging dynamics with its threshold parameters (sigma, tau, theta),
//! Monte Carlo estimation of solve probabilities and critical points, and
//! independent numerical evaluation of the critical constants that govern
//! the large-size behavior of the ring and torus puzzles.

pub mod engine;
pub mod montecarlo;
pub mod randomness;
pub mod theory;
pub mod topology;

pub use engine::{DynamicsParams, Engine, MergeRule, Partition, RunResult, Theta};
pub use randomness::{EdgeSampler, ExamLedger};
pub use topology::{Topology, VertexId};
