//! Usage vectors, Jaccard usage similarity and epsilon-neighborhoods.
//!
//! A [`UsageVector`] is a fixed-length bitset over client positions. The
//! similarity of two libraries is the Jaccard coefficient of their client
//! sets; the distance is its complement.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::LibraryId;
use crate::{Error, Result};

/// Slack applied when comparing a distance against an epsilon threshold.
///
/// Epsilon schedules are built from decimal steps (0.05, 0.1, ...) that are
/// not exactly representable, while distances are ratios of small integers.
/// A distance of exactly `1 - 17/20` must still fall inside a ball of radius
/// `3 * 0.05`.
pub const DISTANCE_TOLERANCE: f64 = 1e-9;

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UsageVector {
    words: Vec<u64>,
    len: usize,
    cardinality: usize,
}

impl UsageVector {
    /// All-zero vector over `len` clients.
    pub fn zeros(len: usize) -> Self {
        UsageVector {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
            cardinality: 0,
        }
    }

    /// Builds a vector with the given client positions set.
    ///
    /// Panics if a position is out of range.
    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.insert(i);
        }
        v
    }

    pub fn insert(&mut self, i: usize) {
        assert!(
            i < self.len,
            "client position {i} out of range {}",
            self.len
        );
        let (w, b) = (i / WORD_BITS, i % WORD_BITS);
        let mask = 1u64 << b;
        if self.words[w] & mask == 0 {
            self.words[w] |= mask;
            self.cardinality += 1;
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / WORD_BITS] & (1u64 << (i % WORD_BITS)) != 0
    }

    /// Number of client positions.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Number of clients using the library (popcount).
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality == 0
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + b)
            })
        })
    }

    pub fn intersection_count(&self, other: &UsageVector) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_count(&self, other: &UsageVector) -> usize {
        self.cardinality + other.cardinality - self.intersection_count(other)
    }

    /// Logical disjunction of two vectors.
    pub fn or(&self, other: &UsageVector) -> UsageVector {
        let mut out = self.clone();
        out.or_assign(other);
        out
    }

    pub fn or_assign(&mut self, other: &UsageVector) {
        assert_eq!(self.len, other.len, "usage vectors differ in length");
        let mut card = 0;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
            card += a.count_ones() as usize;
        }
        self.cardinality = card;
    }

    /// Logical conjunction of two vectors.
    pub fn and(&self, other: &UsageVector) -> UsageVector {
        assert_eq!(self.len, other.len, "usage vectors differ in length");
        let words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        let cardinality = words.iter().map(|w| w.count_ones() as usize).sum();
        UsageVector {
            words,
            len: self.len,
            cardinality,
        }
    }

    /// Projects the vector onto a subset of client positions, renumbered in
    /// the order given.
    pub fn select(&self, positions: &[usize]) -> UsageVector {
        UsageVector::from_indices(
            positions.len(),
            positions
                .iter()
                .enumerate()
                .filter(|(_, &p)| self.contains(p))
                .map(|(new, _)| new),
        )
    }
}

impl AsRef<UsageVector> for UsageVector {
    fn as_ref(&self) -> &UsageVector {
        self
    }
}

/// Jaccard similarity of two client sets. Two empty vectors have similarity 0.
pub fn usim(a: &UsageVector, b: &UsageVector) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 0.0;
    }
    a.intersection_count(b) as f64 / union as f64
}

/// Usage distance, `1 - usim`.
pub fn dist(a: &UsageVector, b: &UsageVector) -> f64 {
    1.0 - usim(a, b)
}

/// Closed-ball membership test used by every neighborhood query.
///
/// Empty vectors are never within range of anything.
pub fn within(a: &UsageVector, b: &UsageVector, epsilon: f64) -> bool {
    !a.is_empty() && !b.is_empty() && dist(a, b) <= epsilon + DISTANCE_TOLERANCE
}

/// Indices `j != i` whose distance to `points[i]` is at most `epsilon`.
pub fn neighbors<P: AsRef<UsageVector>>(points: &[P], i: usize, epsilon: f64) -> Vec<usize> {
    let center = points[i].as_ref();
    points
        .iter()
        .enumerate()
        .filter(|&(j, p)| j != i && within(center, p.as_ref(), epsilon))
        .map(|(j, _)| j)
        .collect()
}

/// Neighbor lists for every point, each sorted ascending.
///
/// With the `parallel` feature the pairwise scan is split over rows; the
/// output does not depend on scheduling.
pub fn neighbor_lists<P>(points: &[P], epsilon: f64) -> Vec<Vec<usize>>
where
    P: AsRef<UsageVector> + Sync,
{
    let row = |i: usize| -> Vec<usize> {
        let center = points[i].as_ref();
        ((i + 1)..points.len())
            .filter(|&j| within(center, points[j].as_ref(), epsilon))
            .collect()
    };

    #[cfg(feature = "parallel")]
    let upper: Vec<Vec<usize>> = {
        use rayon::prelude::*;
        (0..points.len()).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let upper: Vec<Vec<usize>> = (0..points.len()).map(row).collect();

    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (i, js) in upper.iter().enumerate() {
        for &j in js {
            lists[j].push(i);
        }
    }
    for (i, js) in upper.into_iter().enumerate() {
        lists[i].extend(js);
    }
    lists
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointKind {
    Atomic(LibraryId),
    Composite {
        children: Vec<Point>,
        formed_at: f64,
    },
}

/// A library, or a cluster of points folded into one during layered mining.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    kind: PointKind,
    vector: UsageVector,
}

impl Point {
    pub fn atomic(library: LibraryId, vector: UsageVector) -> Self {
        Point {
            kind: PointKind::Atomic(library),
            vector,
        }
    }

    /// Folds `children` into one point whose vector is the OR of theirs.
    pub fn composite(children: Vec<Point>, formed_at: f64) -> Result<Self> {
        if children.len() < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "a composite needs at least 2 children, got {}",
                children.len()
            )));
        }
        if !(0.0..=1.0).contains(&formed_at) {
            return Err(Error::InvalidConfig(alloc::format!(
                "formation epsilon {formed_at} outside [0, 1]"
            )));
        }
        let mut vector = children[0].vector.clone();
        for c in &children[1..] {
            vector.or_assign(&c.vector);
        }
        Ok(Point {
            kind: PointKind::Composite {
                children,
                formed_at,
            },
            vector,
        })
    }

    pub fn kind(&self) -> &PointKind {
        &self.kind
    }

    pub fn vector(&self) -> &UsageVector {
        &self.vector
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.kind, PointKind::Atomic(_))
    }

    /// Epsilon at which a composite formed; `None` for atomic points.
    pub fn formed_at(&self) -> Option<f64> {
        match &self.kind {
            PointKind::Atomic(_) => None,
            PointKind::Composite { formed_at, .. } => Some(*formed_at),
        }
    }

    pub fn children(&self) -> &[Point] {
        match &self.kind {
            PointKind::Atomic(_) => &[],
            PointKind::Composite { children, .. } => children,
        }
    }

    /// Atomic libraries beneath this point, depth-first in child order.
    pub fn leaves(&self) -> Vec<&LibraryId> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match &p.kind {
                PointKind::Atomic(id) => out.push(id),
                PointKind::Composite { children, .. } => stack.extend(children.iter().rev()),
            }
        }
        out
    }
}

impl AsRef<UsageVector> for Point {
    fn as_ref(&self) -> &UsageVector {
        &self.vector
    }
}
