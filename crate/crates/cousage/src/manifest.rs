//! Direct dependencies from Maven-style `pom.xml` manifests.
//!
//! Only `project/dependencies/dependency` elements are read. Dependency
//! management, profiles, plugins and property interpolation are ignored, as
//! are versions, scopes and exclusions. Element names are matched without
//! regard to namespace.

use cousage_core::LibraryId;
use roxmltree::{Document, Node};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    /// `group:artifact` ids in document order, first occurrence kept.
    pub dependencies: Vec<LibraryId>,
    /// One entry per skipped dependency.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ManifestError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

pub fn parse_manifest(xml: &str) -> Result<Manifest, ManifestError> {
    let doc = Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        ManifestError {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "project" {
        let pos = doc.text_pos_at(root.range().start);
        return Err(ManifestError {
            line: pos.row,
            column: pos.col,
            message: format!(
                "expected <project> root, found <{}>",
                root.tag_name().name()
            ),
        });
    }

    let mut out = Manifest::default();
    let deps = child_elements(root, "dependencies").flat_map(|d| child_elements(d, "dependency"));
    for dep in deps {
        let line = doc.text_pos_at(dep.range().start).row;
        let group = child_text(dep, "groupId");
        let artifact = child_text(dep, "artifactId");
        let (Some(group), Some(artifact)) = (group, artifact) else {
            out.warnings.push(format!(
                "line {line}: dependency without groupId or artifactId skipped"
            ));
            continue;
        };
        match LibraryId::from_coordinates(group, artifact) {
            Ok(id) if !out.dependencies.contains(&id) => out.dependencies.push(id),
            Ok(_) => {}
            Err(e) => out.warnings.push(format!("line {line}: {e}")),
        }
    }
    Ok(out)
}

fn child_elements<'a, 'i>(
    node: Node<'a, 'i>,
    name: &'static str,
) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn child_text<'a>(node: Node<'a, '_>, name: &'static str) -> Option<&'a str> {
    child_elements(node, name)
        .next()
        .and_then(|n| n.text())
        .map(str::trim)
        .filter(|t| !t.is_empty())
}
