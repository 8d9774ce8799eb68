//! Library co-usage pattern mining.
//!
//! Third-party libraries are described by the set of client systems that
//! depend on them. Libraries whose client sets overlap strongly are grouped
//! by a layered DBSCAN: each pass clusters at a slightly larger Jaccard
//! distance and folds every cluster into a single composite point whose
//! usage vector is the union of its members. The resulting patterns are
//! nested trees whose inner layers are the most cohesive.
//!
//! This crate is `no_std` (it needs `alloc`). The `parallel` feature pulls in
//! `std` and rayon for pairwise distance evaluation and fold-level
//! parallelism; results are identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baseline;
pub mod corpus;
pub mod dbscan;
mod error;
pub mod evaluation;
pub mod layering;
pub mod metrics;
pub mod recommend;
pub mod simindex;

pub use corpus::{ClientId, CorpusStats, DependencyMatrix, LibraryId};
pub use dbscan::{run_dbscan, ClusteringResult};
pub use error::Error;
pub use layering::{epsilon_dbscan, MiningConfig, MiningResult, Pattern, TraceStep};
pub use simindex::{Point, PointKind, UsageVector};

pub type Result<T, E = Error> = core::result::Result<T, E>;
