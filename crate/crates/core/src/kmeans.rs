//! Barycentre trajectories and Lloyd's k-means over registered trajectories.
//!
//! All trajectories handed to this module must share one grid (see
//! [`crate::trajectory::crop_common`]). The distance between two
//! trajectories is their mean cosine energy over the grid, and a cluster's
//! centroid is the pointwise cosine barycentre of its members.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sphere::{self, cosine_energy, gc_distance, GeomError, UnitVector, EARTH_RADIUS_KM};
use crate::trajectory::latitude_upcrossings;
pub use crate::trajectory::GridPath;

/// Safety cap on Lloyd iterations within one restart.
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("trajectories are not on the same time grid")]
    GridMismatch,
    #[error("no trajectories supplied")]
    EmptyInput,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("need at least {k} trajectories for k = {k}, found {n}")]
    TooFewTrajectories { n: usize, k: usize },
    #[error("barycentre undefined at relative grid index {index}: {source}")]
    DegenerateMean { index: i64, source: GeomError },
}

/// Mean cosine energy between two trajectories over their shared grid.
pub fn traj_distance(a: &GridPath, b: &GridPath) -> Result<f64, ClusterError> {
    if !a.same_grid(b) || a.is_empty() {
        return Err(ClusterError::GridMismatch);
    }
    Ok(path_distance(a, b))
}

fn path_distance(a: &GridPath, b: &GridPath) -> f64 {
    let total: f64 = a
        .positions
        .iter()
        .zip(&b.positions)
        .map(|(p, q)| cosine_energy(p, q))
        .sum();
    total / a.positions.len() as f64
}

/// Pointwise cosine barycentre of the members.
pub fn barycentre_trajectory(members: &[&GridPath]) -> Result<GridPath, ClusterError> {
    let first = members.first().ok_or(ClusterError::EmptyInput)?;
    if members.iter().any(|m| !m.same_grid(first)) {
        return Err(ClusterError::GridMismatch);
    }
    let mut positions = Vec::with_capacity(first.len());
    let mut column = Vec::with_capacity(members.len());
    for (offset, index) in (first.first_index..=first.last_index()).enumerate() {
        column.clear();
        column.extend(members.iter().map(|m| (m.positions[offset], 1.0)));
        let centre = sphere::cosine_barycentre(&column)
            .map_err(|source| ClusterError::DegenerateMean { index, source })?;
        positions.push(centre);
    }
    Ok(GridPath {
        first_index: first.first_index,
        grid_step: first.grid_step,
        positions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each assignment step.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Cluster label of each input trajectory.
    pub assignments: Vec<usize>,
    pub centroids: Vec<GridPath>,
    /// Sum over trajectories of the distance to the assigned centroid.
    pub objective: f64,
    pub seed: u64,
    pub restarts: usize,
    pub best_restart: usize,
    /// `ordering[raw]` is the current label of the centroid found at raw
    /// index `raw` by the winning restart.
    pub ordering: Vec<usize>,
    pub restart_log: Vec<RestartSummary>,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn members(&self, label: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Recomputes the objective from the assignments and centroids.
    pub fn recompute_objective(&self, paths: &[GridPath]) -> f64 {
        paths
            .iter()
            .zip(&self.assignments)
            .map(|(p, &a)| path_distance(p, &self.centroids[a]))
            .sum()
    }
}

struct RestartOutcome {
    assignments: Vec<usize>,
    centroids: Vec<GridPath>,
    summary: RestartSummary,
}

fn assign(paths: &[GridPath], centroids: &[GridPath]) -> (Vec<usize>, Vec<f64>) {
    paths
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let d = path_distance(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .unzip()
}

fn update(
    paths: &[GridPath],
    assignments: &[usize],
    distances: &[f64],
    k: usize,
) -> Result<Vec<GridPath>, ClusterError> {
    let mut members: Vec<Vec<&GridPath>> = vec![Vec::new(); k];
    for (p, &a) in paths.iter().zip(assignments) {
        members[a].push(p);
    }
    // Empty clusters are reseeded with the trajectories farthest from their
    // current centroids, one distinct trajectory per empty cluster.
    let mut by_distance: Vec<usize> = (0..paths.len()).collect();
    by_distance.sort_by(|&i, &j| distances[j].total_cmp(&distances[i]).then(i.cmp(&j)));
    let mut reseeds = by_distance.into_iter();

    members
        .iter()
        .map(|m| {
            if m.is_empty() {
                let i = reseeds.next().expect("n >= k trajectories");
                Ok(paths[i].clone())
            } else {
                barycentre_trajectory(m)
            }
        })
        .collect()
}

fn run_restart(
    paths: &[GridPath],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RestartOutcome, ClusterError> {
    let mut centroids: Vec<GridPath> = index::sample(rng, paths.len(), k)
        .into_iter()
        .map(|i| paths[i].clone())
        .collect();
    let mut trace = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut converged = false;

    loop {
        let (assignments, distances) = assign(paths, &centroids);
        let objective: f64 = distances.iter().sum();
        if let Some(&last) = trace.last() {
            debug_assert!(
                objective <= last + 1e-9,
                "Lloyd objective increased: {last} -> {objective}"
            );
        }
        trace.push(objective);
        if previous.as_ref() == Some(&assignments) {
            converged = true;
        }
        if converged || trace.len() >= MAX_ITERATIONS {
            return Ok(RestartOutcome {
                assignments,
                centroids,
                summary: RestartSummary {
                    objective,
                    iterations: trace.len(),
                    converged,
                    trace,
                },
            });
        }
        centroids = update(paths, &assignments, &distances, k)?;
        previous = Some(assignments);
    }
}

/// Lloyd's algorithm with `restarts` random initialisations, returning the
/// restart with the smallest objective (earliest restart on ties).
///
/// Restart `r` draws from a ChaCha8 stream seeded with `seed ^ r`, so the
/// result does not depend on the order in which restarts run.
pub fn lloyd_kmeans(
    paths: &[GridPath],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<Clustering, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    let first = paths.first().ok_or(ClusterError::EmptyInput)?;
    if paths.len() < k {
        return Err(ClusterError::TooFewTrajectories { n: paths.len(), k });
    }
    if first.is_empty() || paths.iter().any(|p| !p.same_grid(first)) {
        return Err(ClusterError::GridMismatch);
    }
    let restarts = restarts.max(1);
    let outcomes = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r as u64);
            run_restart(paths, k, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let best_restart = outcomes
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            a.summary
                .objective
                .total_cmp(&b.summary.objective)
                .then(i.cmp(j))
        })
        .map(|(i, _)| i)
        .expect("at least one restart");
    let restart_log = outcomes.iter().map(|o| o.summary.clone()).collect();
    let best = outcomes
        .into_iter()
        .nth(best_restart)
        .expect("index in range");

    Ok(Clustering {
        k,
        assignments: best.assignments,
        centroids: best.centroids,
        objective: best.summary.objective,
        seed,
        restarts,
        best_restart,
        ordering: (0..k).collect(),
        restart_log,
    })
}

/// Longitude at which a centroid first upcrosses `register_lat`, falling back
/// to its longitude at relative time 0 (or the grid point nearest to it).
pub fn crossing_longitude(centroid: &GridPath, register_lat: f64) -> f64 {
    let lats: Vec<f64> = centroid
        .positions
        .iter()
        .map(UnitVector::latitude)
        .collect();
    if let Some(&(i, frac)) = latitude_upcrossings(&lats, register_lat).first() {
        let (a, b) = (&centroid.positions[i], &centroid.positions[i + 1]);
        if let Ok(p) = sphere::slerp(a, b, frac) {
            return p.longitude();
        }
        return a.longitude();
    }
    let anchor = 0.clamp(centroid.first_index, centroid.last_index());
    centroid.at(anchor).map_or(f64::NAN, UnitVector::longitude)
}

/// Relabels clusters so that label 0 is the most westerly by
/// [`crossing_longitude`]. The partition and objective are unchanged.
pub fn order_west_to_east(clustering: &Clustering, register_lat: f64) -> Clustering {
    let keys: Vec<f64> = clustering
        .centroids
        .iter()
        .map(|c| crossing_longitude(c, register_lat))
        .collect();
    let mut by_longitude: Vec<usize> = (0..clustering.k).collect();
    by_longitude.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]).then(i.cmp(&j)));
    let mut relabel = vec![0; clustering.k];
    for (label, &current) in by_longitude.iter().enumerate() {
        relabel[current] = label;
    }
    Clustering {
        assignments: clustering.assignments.iter().map(|&a| relabel[a]).collect(),
        centroids: by_longitude
            .iter()
            .map(|&i| clustering.centroids[i].clone())
            .collect(),
        ordering: clustering.ordering.iter().map(|&o| relabel[o]).collect(),
        ..clustering.clone()
    }
}

/// Root-mean-square great-circle distance in kilometres between a trajectory
/// and a centroid on the same grid.
pub fn rms_distance_km(path: &GridPath, centroid: &GridPath) -> f64 {
    let mean_sq = path
        .positions
        .iter()
        .zip(&centroid.positions)
        .map(|(p, c)| gc_distance(p, c).powi(2))
        .sum::<f64>()
        / path.positions.len() as f64;
    mean_sq.sqrt() * EARTH_RADIUS_KM
}

/// RMS distances (km) of each trajectory to its centroid, grouped by label.
pub fn rms_distances(clustering: &Clustering, paths: &[GridPath]) -> Vec<Vec<f64>> {
    let mut groups = vec![Vec::new(); clustering.k];
    for (p, &a) in paths.iter().zip(&clustering.assignments) {
        groups[a].push(rms_distance_km(p, &clustering.centroids[a]));
    }
    groups
}

/// Centroids recomputed per cluster over the intersection of the members'
/// own (uncropped) grid ranges, for display. Clusters whose members share no
/// grid point yield `None`.
pub fn recropped_centroids(
    uncropped: &[GridPath],
    clustering: &Clustering,
) -> Vec<Result<Option<GridPath>, ClusterError>> {
    (0..clustering.k)
        .map(|label| {
            let members: Vec<&GridPath> = clustering
                .members(label)
                .into_iter()
                .map(|i| &uncropped[i])
                .collect();
            let Some(lo) = members.iter().map(|m| m.first_index).max() else {
                return Ok(None);
            };
            let hi = members
                .iter()
                .map(|m| m.last_index())
                .min()
                .unwrap_or(lo - 1);
            let restricted: Option<Vec<GridPath>> =
                members.iter().map(|m| m.restrict(lo, hi)).collect();
            match restricted {
                Some(r) => barycentre_trajectory(&r.iter().collect::<Vec<_>>()).map(Some),
                None => Ok(None),
            }
        })
        .collect()
}
