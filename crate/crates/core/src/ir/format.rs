use std::fs;
use std::path::Path;

use super::graph::{Graph, GRAPH_FORMAT_VERSION};
use super::validate::validate;
use super::IrError;

/// Canonical JSON: sorted keys, two-space indent, trailing newline.
pub fn to_json(graph: &Graph) -> Result<String, IrError> {
    let value = serde_json::to_value(graph)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

/// Parses and validates a graph.
pub fn from_json(text: &str) -> Result<Graph, IrError> {
    let graph: Graph = serde_json::from_str(text)?;
    if graph.version != GRAPH_FORMAT_VERSION {
        return Err(IrError::Version(graph.version));
    }
    let violations = validate(&graph);
    if !violations.is_empty() {
        return Err(IrError::Invalid(violations));
    }
    Ok(graph)
}

pub fn load(path: &Path) -> Result<Graph, IrError> {
    from_json(&fs::read_to_string(path)?)
}

pub fn save(graph: &Graph, path: &Path) -> Result<(), IrError> {
    fs::write(path, to_json(graph)?)?;
    Ok(())
}
