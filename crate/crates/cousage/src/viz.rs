//! Hierarchy export for the circle-packing explorer.
//!
//! The document is an object with a `patterns` array of layer trees and a
//! flat `noise` array of library leaves. Each layer carries the epsilon it
//! formed at, the cohesion of its flattened libraries and the number of
//! distinct clients using any of them. The JSON schema ships with this
//! crate as [`VIZ_SCHEMA`].

use cousage_core::metrics::puc_indexed;
use cousage_core::{DependencyMatrix, LibraryId, MiningResult, Point};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const VIZ_SCHEMA: &str = include_str!("../schema/viz.schema.json");

const ARTIFACT_BASE: &str = "https://mvnrepository.com/artifact";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizDocument {
    pub patterns: Vec<VizNode>,
    pub noise: Vec<VizNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VizNode {
    #[serde(rename_all = "camelCase")]
    PatternLayer {
        name: String,
        epsilon: f64,
        puc: f64,
        client_count: usize,
        children: Vec<VizNode>,
    },
    #[serde(rename_all = "camelCase")]
    Library {
        name: String,
        client_count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        artifact_url: Option<String>,
    },
}

impl VizNode {
    /// Library names below this node, in tree order.
    pub fn leaf_names(&self) -> Vec<&str> {
        match self {
            VizNode::Library { name, .. } => vec![name.as_str()],
            VizNode::PatternLayer { children, .. } => {
                children.iter().flat_map(VizNode::leaf_names).collect()
            }
        }
    }
}

/// Maven repository page for a `group:artifact` id.
pub fn artifact_url(lib: &LibraryId) -> Option<String> {
    lib.group_artifact()
        .map(|(g, a)| format!("{ARTIFACT_BASE}/{g}/{a}"))
}

fn leaf(lib: &LibraryId, m: &DependencyMatrix) -> VizNode {
    VizNode::Library {
        name: lib.as_str().to_owned(),
        client_count: m.usage_of(lib).map_or(0, |v| v.cardinality()),
        artifact_url: artifact_url(lib),
    }
}

fn node(p: &Point, name: String, m: &DependencyMatrix) -> Result<VizNode> {
    let Some(epsilon) = p.formed_at() else {
        return Ok(leaf(p.leaves()[0], m));
    };
    let libs = m.library_indices(p.leaves())?;
    let mut children = Vec::with_capacity(p.children().len());
    let mut layer = 0;
    for c in p.children() {
        if c.is_atomic() {
            children.push(node(c, String::new(), m)?);
        } else {
            layer += 1;
            children.push(node(c, format!("{name}.{layer}"), m)?);
        }
    }
    Ok(VizNode::PatternLayer {
        name,
        epsilon,
        // pattern members always have clients in their own matrix
        puc: puc_indexed(&libs, m, None).unwrap_or(0.0),
        client_count: p.vector().cardinality(),
        children,
    })
}

pub fn to_viz(result: &MiningResult, m: &DependencyMatrix) -> Result<VizDocument> {
    let patterns = result
        .patterns
        .iter()
        .enumerate()
        .map(|(i, p)| node(p.root(), format!("pattern {}", i + 1), m))
        .collect::<Result<Vec<_>>>()?;
    let noise = result.noise.iter().map(|l| leaf(l, m)).collect();
    Ok(VizDocument { patterns, noise })
}

pub fn to_viz_json(result: &MiningResult, m: &DependencyMatrix) -> Result<String> {
    let mut text =
        serde_json::to_string_pretty(&to_viz(result, m)?).expect("serializable document");
    text.push('\n');
    Ok(text)
}
