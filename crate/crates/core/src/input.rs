//! Tree file formats.
//!
//! * CSV with header `id,parent,weight`; the root row leaves `parent` empty.
//! * JSON as nested objects `{"id": .., "weight": .., "children": [..]}`.
//!   Ids may be strings or numbers.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{build_tree, InputTree, NodeRecord, TreeError};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json node id must be a string or number")]
    BadId,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Deserialize, Serialize)]
struct CsvRow {
    id: String,
    parent: String,
    weight: f64,
}

pub fn read_csv<R: Read>(reader: R) -> Result<InputTree, InputError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut records = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let parent = (!row.parent.is_empty()).then_some(row.parent);
        records.push(NodeRecord {
            id: row.id,
            parent,
            weight: row.weight,
        });
    }
    Ok(build_tree(records)?)
}

pub fn write_csv<W: Write>(tree: &InputTree, writer: W) -> Result<(), InputError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in tree.records() {
        wtr.serialize(CsvRow {
            id: r.id,
            parent: r.parent.unwrap_or_default(),
            weight: r.weight,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct JsonNode {
    id: serde_json::Value,
    weight: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<JsonNode>,
}

fn json_id(v: &serde_json::Value) -> Result<String, InputError> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        _ => Err(InputError::BadId),
    }
}

pub fn read_json<R: Read>(reader: R) -> Result<InputTree, InputError> {
    let root: JsonNode = serde_json::from_reader(reader)?;
    let mut records = Vec::new();
    let mut stack: Vec<(&JsonNode, Option<String>)> = vec![(&root, None)];
    while let Some((node, parent)) = stack.pop() {
        let id = json_id(&node.id)?;
        for c in node.children.iter().rev() {
            stack.push((c, Some(id.clone())));
        }
        records.push(NodeRecord {
            id,
            parent,
            weight: node.weight,
        });
    }
    Ok(build_tree(records)?)
}

pub fn write_json<W: Write>(tree: &InputTree, writer: W) -> Result<(), InputError> {
    let mut children = vec![Vec::new(); tree.len()];
    for i in 0..tree.len() {
        if let Some(p) = tree.parent(i) {
            children[p].push(i);
        }
    }
    fn build(tree: &InputTree, children: &[Vec<usize>], v: usize) -> JsonNode {
        JsonNode {
            id: serde_json::Value::String(tree.id(v).to_owned()),
            weight: tree.weight(v),
            children: children[v].iter().map(|&c| build(tree, children, c)).collect(),
        }
    }
    serde_json::to_writer(writer, &build(tree, &children, tree.root()))?;
    Ok(())
}
