//! Certificates on a trajectory: eventual contraction, stationarity,
//! modular attractors, PCA geometry and symbolic reducibility.

pub mod cluster;
pub mod convergence;
pub mod lipschitz;
pub mod pca;
pub mod reducibility;
pub mod torus;

pub use cluster::{dist_to_attractor, find_attractors, find_attractors_with, AttractorSet, ClusterOptions};
pub use convergence::{convergence_test, energy_distance, ConvergenceTest, DistConvergenceReport};
pub use lipschitz::{estimate_lipschitz, LipschitzEstimate, LipschitzProbe};
pub use pca::{pca_project, Projection};
pub use reducibility::{symbolic_reducibility, ReducibilityReport};
pub use torus::{annulus_score, torus_score, ANNULUS_THRESHOLD};
