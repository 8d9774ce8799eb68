//! JSON form of a mining result.
//!
//! Patterns are written as nested layers: a layer is an object with the
//! epsilon it formed at and its children, a library is a bare string.
//! Reading a result back needs the matrix it was mined from, since usage
//! vectors are not stored.

use std::collections::BTreeSet;
use std::path::Path;

use cousage_core::{
    DependencyMatrix, LibraryId, MiningConfig, MiningResult, Pattern, Point, TraceStep,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ResultDoc {
    config: ConfigDoc,
    patterns: Vec<NodeDoc>,
    noise: Vec<String>,
    trace: Vec<TraceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ConfigDoc {
    max_epsilon: f64,
    epsilon_step: f64,
    min_pts: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Library(String),
    Layer {
        epsilon: f64,
        children: Vec<NodeDoc>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TraceDoc {
    epsilon: f64,
    points_in: usize,
    clusters: usize,
    noise: usize,
}

fn node_doc(p: &Point) -> NodeDoc {
    match p.formed_at() {
        None => NodeDoc::Library(p.leaves()[0].as_str().to_owned()),
        Some(epsilon) => NodeDoc::Layer {
            epsilon,
            children: p.children().iter().map(node_doc).collect(),
        },
    }
}

pub fn result_to_json(r: &MiningResult) -> String {
    let doc = ResultDoc {
        config: ConfigDoc {
            max_epsilon: r.config.max_epsilon,
            epsilon_step: r.config.epsilon_step,
            min_pts: r.config.min_pts,
        },
        patterns: r.patterns.iter().map(|p| node_doc(p.root())).collect(),
        noise: r.noise.iter().map(|l| l.as_str().to_owned()).collect(),
        trace: r
            .trace
            .iter()
            .map(|t| TraceDoc {
                epsilon: t.epsilon,
                points_in: t.points_in,
                clusters: t.clusters,
                noise: t.noise,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable result");
    text.push('\n');
    text
}

fn lib_point(
    name: &str,
    m: &DependencyMatrix,
    seen: &mut BTreeSet<LibraryId>,
) -> cousage_core::Result<Point> {
    let id = LibraryId::new(name)?;
    let v = m
        .usage_of(&id)
        .ok_or_else(|| cousage_core::Error::UnknownLibrary(id.as_str().to_owned()))?
        .clone();
    if !seen.insert(id.clone()) {
        return Err(cousage_core::Error::InvalidConfig(format!(
            "library {id} listed twice"
        )));
    }
    Ok(Point::atomic(id, v))
}

fn build_point(
    n: NodeDoc,
    m: &DependencyMatrix,
    seen: &mut BTreeSet<LibraryId>,
) -> cousage_core::Result<Point> {
    match n {
        NodeDoc::Library(name) => lib_point(&name, m, seen),
        NodeDoc::Layer { epsilon, children } => {
            let children = children
                .into_iter()
                .map(|c| build_point(c, m, seen))
                .collect::<cousage_core::Result<Vec<_>>>()?;
            Point::composite(children, epsilon)
        }
    }
}

/// Rebuilds a result written by [`result_to_json`] against its matrix.
pub fn result_from_json(text: &str, m: &DependencyMatrix, path: &Path) -> Result<MiningResult> {
    let doc: ResultDoc =
        serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
    let bad = |e: cousage_core::Error| Error::format(path, e.to_string());
    let mut seen = BTreeSet::new();
    let patterns = doc
        .patterns
        .into_iter()
        .map(|n| build_point(n, m, &mut seen).and_then(Pattern::new))
        .collect::<cousage_core::Result<Vec<_>>>()
        .map_err(bad)?;
    let noise = doc
        .noise
        .iter()
        .map(|n| lib_point(n, m, &mut seen).map(|p| p.leaves()[0].clone()))
        .collect::<cousage_core::Result<Vec<_>>>()
        .map_err(bad)?;
    Ok(MiningResult {
        config: MiningConfig {
            max_epsilon: doc.config.max_epsilon,
            epsilon_step: doc.config.epsilon_step,
            min_pts: doc.config.min_pts,
        },
        patterns,
        noise,
        trace: doc
            .trace
            .into_iter()
            .map(|t| TraceStep {
                epsilon: t.epsilon,
                points_in: t.points_in,
                clusters: t.clusters,
                noise: t.noise,
            })
            .collect(),
    })
}
