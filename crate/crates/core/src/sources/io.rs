use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{GraphDocument, LevelGraph};

use super::ngram::TokenCorpus;

/// Canonical JSON: keys sorted, states sorted by id, edges sorted, two-space
/// indentation and a trailing newline. Equal graphs give identical bytes.
pub fn graph_to_json(graph: &LevelGraph) -> String {
    let value = serde_json::to_value(graph.to_document()).expect("graph documents always serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("json values always serialize");
    text.push('\n');
    text
}

pub fn save_graph(graph: &LevelGraph, path: &Path) -> Result<()> {
    std::fs::write(path, graph_to_json(graph)).map_err(|e| Error::io(path, e))
}

/// Parses a graph file without checking its invariants.
pub fn load_graph_document(path: &Path) -> Result<GraphDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn load_graph(path: &Path) -> Result<LevelGraph> {
    LevelGraph::from_document(load_graph_document(path)?)
}

pub fn load_corpus(path: &Path) -> Result<TokenCorpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(TokenCorpus::from_text(&text))
}
