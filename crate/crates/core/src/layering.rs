//! Layered DBSCAN: cluster at a rising epsilon and fold each cluster into a
//! composite point before the next pass.
//!
//! The first pass runs at epsilon 0 and groups libraries with identical
//! client sets. Each following pass sees the composites of the previous one
//! (their usage vector is the OR of their members) together with the points
//! that were still noise, and clusters them at `epsilon + step`. A composite
//! that absorbs further points becomes a child of the new composite, so each
//! resulting pattern is a tree whose depth records the density levels it was
//! assembled from.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::corpus::{DependencyMatrix, LibraryId};
use crate::dbscan::run_dbscan;
use crate::simindex::{Point, PointKind};
use crate::{Error, Result};

/// Tolerance for deciding whether a schedule point lies below `max_epsilon`.
const SCHEDULE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    pub max_epsilon: f64,
    pub epsilon_step: f64,
    pub min_pts: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            max_epsilon: 0.5,
            epsilon_step: 0.05,
            min_pts: 2,
        }
    }
}

impl MiningConfig {
    /// `max_epsilon` may exceed 1 by at most one step so that a final pass
    /// at epsilon 1 (which merges everything) is reachable.
    pub fn validate(&self) -> Result<()> {
        let MiningConfig {
            max_epsilon,
            epsilon_step,
            min_pts,
        } = *self;
        if !max_epsilon.is_finite() || !epsilon_step.is_finite() || epsilon_step <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "epsilon step must be a positive number, got {epsilon_step}"
            )));
        }
        if epsilon_step > max_epsilon {
            return Err(Error::InvalidConfig(alloc::format!(
                "epsilon step {epsilon_step} exceeds max epsilon {max_epsilon}"
            )));
        }
        if max_epsilon > 1.0 + epsilon_step + SCHEDULE_TOLERANCE {
            return Err(Error::InvalidConfig(alloc::format!(
                "max epsilon {max_epsilon} exceeds 1 + step"
            )));
        }
        if min_pts < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "min_pts must be at least 2, got {min_pts}"
            )));
        }
        Ok(())
    }

    /// Epsilon values visited: `0, step, 2*step, ...` strictly below
    /// `max_epsilon`, each rounded to 12 decimals.
    pub fn schedule(&self) -> Vec<f64> {
        epsilon_schedule(self.max_epsilon, self.epsilon_step)
    }
}

pub(crate) fn epsilon_schedule(max_epsilon: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if step <= 0.0 {
        return out;
    }
    let mut i = 0u32;
    loop {
        let eps = round12(f64::from(i) * step);
        if eps >= max_epsilon - SCHEDULE_TOLERANCE {
            break;
        }
        out.push(eps.min(1.0));
        i += 1;
    }
    out
}

pub(crate) fn round12(x: f64) -> f64 {
    libm::round(x * 1e12) / 1e12
}

/// A mined pattern: a composite point whose leaves are its member libraries.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    root: Point,
    members: Vec<LibraryId>,
}

impl Pattern {
    pub fn new(root: Point) -> Result<Self> {
        if root.is_atomic() {
            return Err(Error::InvalidConfig(
                "a pattern root must be a composite point".into(),
            ));
        }
        let members = root.leaves().into_iter().cloned().collect();
        Ok(Pattern { root, members })
    }

    pub fn root(&self) -> &Point {
        &self.root
    }

    /// Member libraries in depth-first leaf order.
    pub fn members(&self) -> &[LibraryId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, lib: &LibraryId) -> bool {
        self.members.contains(lib)
    }

    /// Epsilon at which the outermost layer formed.
    pub fn epsilon(&self) -> f64 {
        self.root.formed_at().unwrap_or(0.0)
    }

    /// Number of nested layers on the deepest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(p: &Point) -> usize {
            match p.kind() {
                PointKind::Atomic(_) => 0,
                PointKind::Composite { children, .. } => {
                    1 + children.iter().map(walk).max().unwrap_or(0)
                }
            }
        }
        walk(&self.root)
    }
}

/// Member libraries of a pattern as a set.
pub fn flatten(p: &Pattern) -> BTreeSet<LibraryId> {
    p.members.iter().cloned().collect()
}

/// For each member library, the formation epsilons of its enclosing
/// composites, outermost first.
pub fn layer_paths(p: &Pattern) -> Vec<(LibraryId, Vec<f64>)> {
    fn walk(point: &Point, path: &mut Vec<f64>, out: &mut Vec<(LibraryId, Vec<f64>)>) {
        match point.kind() {
            PointKind::Atomic(id) => out.push((id.clone(), path.clone())),
            PointKind::Composite {
                children,
                formed_at,
            } => {
                path.push(*formed_at);
                for c in children {
                    walk(c, path, out);
                }
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(&p.root, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub epsilon: f64,
    pub points_in: usize,
    pub clusters: usize,
    pub noise: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningResult {
    pub config: MiningConfig,
    pub patterns: Vec<Pattern>,
    pub noise: Vec<LibraryId>,
    pub trace: Vec<TraceStep>,
}

impl MiningResult {
    /// Pattern containing `lib`, if any.
    pub fn pattern_of(&self, lib: &LibraryId) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.contains(lib))
    }
}

/// Mines layered co-usage patterns from `m`.
pub fn epsilon_dbscan(m: &DependencyMatrix, cfg: &MiningConfig) -> Result<MiningResult> {
    cfg.validate()?;
    mine_with_schedule(m, *cfg, &cfg.schedule())
}

pub(crate) fn mine_with_schedule(
    m: &DependencyMatrix,
    cfg: MiningConfig,
    schedule: &[f64],
) -> Result<MiningResult> {
    let mut points: Vec<Point> = m
        .libraries()
        .iter()
        .zip(m.usage_vectors())
        .map(|(id, v)| Point::atomic(id.clone(), v.clone()))
        .collect();
    let mut trace = Vec::with_capacity(schedule.len());

    for &eps in schedule {
        let clustering = run_dbscan(&points, eps, cfg.min_pts)?;
        trace.push(TraceStep {
            epsilon: eps,
            points_in: points.len(),
            clusters: clustering.clusters.len(),
            noise: clustering.noise.len(),
        });
        log::info!(
            target: "cousage::mining",
            "epsilon={eps} points_in={} clusters={} noise={}",
            points.len(),
            clustering.clusters.len(),
            clustering.noise.len()
        );
        if clustering.clusters.is_empty() {
            continue;
        }

        // Each composite takes the slot of its lowest-indexed member.
        let labels = clustering.labels(points.len());
        let mut slots: Vec<Option<Point>> = points.into_iter().map(Some).collect();
        let mut next = Vec::with_capacity(clustering.noise.len() + clustering.clusters.len());
        for i in 0..slots.len() {
            match labels[i] {
                None => next.push(slots[i].take().expect("noise point taken twice")),
                Some(c) if clustering.clusters[c][0] == i => {
                    let children = clustering.clusters[c]
                        .iter()
                        .map(|&j| slots[j].take().expect("point in two clusters"))
                        .collect();
                    next.push(Point::composite(children, eps)?);
                }
                Some(_) => {}
            }
        }
        points = next;
    }

    let mut patterns = Vec::new();
    let mut noise = Vec::new();
    for p in points {
        match p.kind() {
            PointKind::Atomic(id) => noise.push(id.clone()),
            PointKind::Composite { .. } => patterns.push(Pattern::new(p)?),
        }
    }
    Ok(MiningResult {
        config: cfg,
        patterns,
        noise,
        trace,
    })
}
