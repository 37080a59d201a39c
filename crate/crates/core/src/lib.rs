//! Barycentre clustering of hurricane best tracks on the sphere.
//!
//! The crate is organised as a pipeline of small, pure modules:
//!
//! * [`hurdat`] reads and writes HURDAT2 best-track files.
//! * [`sphere`] holds unit-sphere geometry and the cosine barycentre.
//! * [`trajectory`] selects storms by latitude upcrossings, registers them in
//!   time and resamples them onto a shared grid.
//! * [`kmeans`] clusters registered trajectories with Lloyd's algorithm using
//!   barycentre trajectories as centroids.
//! * [`stats`] tests cluster label sequences for temporal association with
//!   the run statistic, its exact conditional moments and permutation tests.
//! * [`geojson`] exports trajectories and centroids for plotting.
//! * [`synthetic`] generates HURDAT2-shaped storms for demos and tests.

pub mod geojson;
pub mod hurdat;
pub mod kmeans;
pub mod sphere;
pub mod stats;
pub mod synthetic;
pub mod trajectory;

pub use hurdat::{Storm, TrackPoint};
pub use kmeans::Clustering;
pub use sphere::UnitVector;
pub use stats::{LabelTable, Statistic, TestReport};
pub use trajectory::{CrossingSpec, GridPath, RegisteredTrajectory};
