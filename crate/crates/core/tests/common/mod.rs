//! Reference implementations used by the property and acceptance tests.
//!
//! Everything here works on plain sets and exact rationals so that it shares
//! no code with the library under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cousage_core::{DependencyMatrix, Point, PointKind};

pub const TOL: f64 = 1e-9;

/// Client-index sets per library, in matrix column order.
pub fn columns(rows: &[Vec<bool>], libs: usize) -> Vec<BTreeSet<usize>> {
    (0..libs)
        .map(|l| (0..rows.len()).filter(|&c| rows[c][l]).collect())
        .collect()
}

/// Matrix with clients `c0..` and libraries `l00..`, keeping every column.
pub fn matrix(rows: &[Vec<bool>], libs: usize) -> DependencyMatrix {
    let mut b = cousage_core::corpus::MatrixBuilder::new();
    for l in 0..libs {
        b.declare_library(lib_id(l)).unwrap();
    }
    for (c, row) in rows.iter().enumerate() {
        let used = (0..libs).filter(|&l| row[l]).map(lib_id);
        b.add_client(cousage_core::ClientId::new(&format!("c{c}")).unwrap(), used)
            .unwrap();
    }
    b.build()
}

pub fn lib_name(l: usize) -> String {
    format!("l{l:02}")
}

pub fn lib_id(l: usize) -> cousage_core::LibraryId {
    cousage_core::LibraryId::new(&lib_name(l)).unwrap()
}

/// Jaccard similarity as a reduced-free fraction `(num, den)`; `den == 0`
/// when both sets are empty.
pub fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> (usize, usize) {
    (a.intersection(b).count(), a.union(b).count())
}

pub fn jaccard_f64(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    match jaccard(a, b) {
        (_, 0) => 0.0,
        (n, d) => n as f64 / d as f64,
    }
}

/// Whether the Jaccard distance is within `eps`; an empty set is close to
/// nothing.
pub fn close(a: &BTreeSet<usize>, b: &BTreeSet<usize>, eps: f64) -> bool {
    let (n, d) = jaccard(a, b);
    !a.is_empty() && !b.is_empty() && (d - n) as f64 / d as f64 <= eps + TOL
}

pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the epsilon graph, as sorted index sets.
/// Singletons are included.
pub fn components(sets: &[BTreeSet<usize>], eps: f64) -> BTreeSet<Vec<usize>> {
    let mut uf = UnionFind::new(sets.len());
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            if close(&sets[i], &sets[j], eps) {
                uf.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..sets.len() {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Canonical text form of a pattern tree: leaves by name, inner nodes as
/// `(eps:child,child,...)` with children sorted.
pub fn canonical(p: &Point) -> String {
    match p.kind() {
        PointKind::Atomic(l) => l.as_str().to_owned(),
        PointKind::Composite {
            children,
            formed_at,
        } => {
            let mut parts: Vec<String> = children.iter().map(canonical).collect();
            parts.sort();
            format!("({formed_at}:{})", parts.join(","))
        }
    }
}

/// One point of the replayed clustering.
#[derive(Debug, Clone)]
pub struct ReplayPoint {
    pub clients: BTreeSet<usize>,
    /// Canonical tree text, as produced by [`canonical`].
    pub tree: String,
    pub members: BTreeSet<String>,
    pub composite: bool,
}

/// Layered clustering with `min_pts = 2`, replayed from scratch: at each
/// epsilon, connected components of size two or more collapse into one
/// point carrying the union of their clients.
pub fn replay(cols: &[BTreeSet<usize>], names: &[String], schedule: &[f64]) -> Vec<ReplayPoint> {
    let mut points: Vec<ReplayPoint> = cols
        .iter()
        .zip(names)
        .map(|(c, n)| ReplayPoint {
            clients: c.clone(),
            tree: n.clone(),
            members: BTreeSet::from([n.clone()]),
            composite: false,
        })
        .collect();
    for &eps in schedule {
        let sets: Vec<BTreeSet<usize>> = points.iter().map(|p| p.clients.clone()).collect();
        let mut next = Vec::new();
        for comp in components(&sets, eps) {
            if comp.len() == 1 {
                next.push(points[comp[0]].clone());
                continue;
            }
            let mut merged = ReplayPoint {
                clients: BTreeSet::new(),
                tree: String::new(),
                members: BTreeSet::new(),
                composite: true,
            };
            let mut parts: Vec<String> = Vec::new();
            for &i in &comp {
                merged.clients.extend(points[i].clients.iter().copied());
                merged.members.extend(points[i].members.iter().cloned());
                parts.push(points[i].tree.clone());
            }
            parts.sort();
            merged.tree = format!("({eps}:{})", parts.join(","));
            next.push(merged);
        }
        points = next;
    }
    points
}

/// Canonical pattern trees and noise names from [`replay`].
pub fn replay_layers(
    cols: &[BTreeSet<usize>],
    names: &[String],
    schedule: &[f64],
) -> (BTreeSet<String>, BTreeSet<String>) {
    let points = replay(cols, names, schedule);
    let patterns = points
        .iter()
        .filter(|p| p.composite)
        .map(|p| p.tree.clone())
        .collect();
    let noise = points
        .iter()
        .filter(|p| !p.composite)
        .map(|p| p.tree.clone())
        .collect();
    (patterns, noise)
}

/// Cohesion from raw sets: over every client using at least one pattern
/// library (within `scope` when given), the mean fraction of the pattern
/// that client uses.
pub fn puc_bruteforce(
    pattern: &BTreeSet<usize>,
    rows: &[Vec<bool>],
    scope: Option<&BTreeSet<usize>>,
) -> Option<f64> {
    let mut used_total = 0usize;
    let mut clients = 0usize;
    for (c, row) in rows.iter().enumerate() {
        if scope.is_some_and(|s| !s.contains(&c)) {
            continue;
        }
        let used = pattern.iter().filter(|&&l| row[l]).count();
        if used > 0 {
            used_total += used;
            clients += 1;
        }
    }
    (clients > 0).then(|| used_total as f64 / (clients * pattern.len()) as f64)
}
