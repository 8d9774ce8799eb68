//! DBSCAN over usage vectors with the Jaccard usage distance.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::simindex::{neighbor_lists, UsageVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusteringResult {
    /// Member indices of each cluster, ascending, in discovery order.
    pub clusters: Vec<Vec<usize>>,
    /// Indices left unclustered, ascending.
    pub noise: Vec<usize>,
}

impl ClusteringResult {
    /// Cluster label per point, `None` for noise.
    pub fn labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut labels = vec![None; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &i in members {
                labels[i] = Some(c);
            }
        }
        labels
    }
}

/// Runs DBSCAN with a closed `epsilon` ball.
///
/// A point is core when its neighborhood, counting itself, holds at least
/// `min_pts` points. Core points are seeded in index order and clusters are
/// expanded breadth-first; a border point reachable from two clusters stays
/// with the first one that reaches it.
pub fn run_dbscan<P>(points: &[P], epsilon: f64, min_pts: usize) -> Result<ClusteringResult>
where
    P: AsRef<UsageVector> + Sync,
{
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(alloc::format!(
            "epsilon {epsilon} outside [0, 1]"
        )));
    }
    if min_pts < 2 {
        return Err(Error::InvalidConfig(alloc::format!(
            "min_pts must be at least 2, got {min_pts}"
        )));
    }
    if points.is_empty() {
        return Ok(ClusteringResult::default());
    }

    let adjacency = neighbor_lists(points, epsilon);
    let is_core: Vec<bool> = adjacency.iter().map(|n| n.len() + 1 >= min_pts).collect();
    let mut label: Vec<Option<usize>> = vec![None; points.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    for seed in 0..points.len() {
        if label[seed].is_some() || !is_core[seed] {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![seed];
        label[seed] = Some(id);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &adjacency[p] {
                if label[q].is_some() {
                    continue;
                }
                label[q] = Some(id);
                members.push(q);
                if is_core[q] {
                    queue.push_back(q);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    let noise = (0..points.len()).filter(|&i| label[i].is_none()).collect();
    Ok(ClusteringResult { clusters, noise })
}
