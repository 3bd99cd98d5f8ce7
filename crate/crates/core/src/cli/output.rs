//! Result JSON and Graphviz rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::summary::{NodeKind, SummaryNode, SummaryTree};
use crate::tree::CanonicalTree;

/// A float written with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Float17(pub f64);

impl Serialize for Float17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = format!("{:.16e}", self.0);
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Float17 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Float17)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeOut {
    pub label: String,
    pub kind: NodeKind,
    pub members: Vec<String>,
    pub weight: Float17,
    pub parent: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResultOut {
    pub k: usize,
    pub entropy_bits: Float17,
    /// Approximation only: entropy of the same partition under rounded weights.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rounded_entropy_bits: Option<Float17>,
    pub nodes: Vec<NodeOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Report {
    pub input_id_map: BTreeMap<String, usize>,
    #[serde(rename = "W")]
    pub total_weight: Float17,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<Float17>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w0: Option<u64>,
    pub results: Vec<ResultOut>,
}

/// Display label of a summary node: the representative id, or `other (m)`
/// with `m` covered input nodes.
pub fn node_label(tree: &CanonicalTree, node: &SummaryNode) -> String {
    match node.kind {
        NodeKind::Group => format!("other ({})", node.members.len()),
        _ => tree.id(node.roots[0]).to_owned(),
    }
}

pub fn id_map(tree: &CanonicalTree) -> BTreeMap<String, usize> {
    tree.ids().iter().enumerate().map(|(v, id)| (id.clone(), v + 1)).collect()
}

pub fn result_out(tree: &CanonicalTree, k: usize, s: &SummaryTree, rounded: Option<f64>) -> ResultOut {
    ResultOut {
        k,
        entropy_bits: Float17(s.entropy().0),
        rounded_entropy_bits: rounded.map(Float17),
        nodes: s
            .nodes()
            .iter()
            .map(|n| NodeOut {
                label: node_label(tree, n),
                kind: n.kind,
                members: n.members.iter().map(|&m| tree.id(m).to_owned()).collect(),
                weight: Float17(n.weight),
                parent: n.parent,
            })
            .collect(),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One Graphviz digraph, nodes in summary order.
pub fn emit_dot(tree: &CanonicalTree, s: &SummaryTree) -> String {
    let mut out = String::from("digraph summary {\n  node [shape=box];\n");
    for (i, n) in s.nodes().iter().enumerate() {
        let _ = writeln!(
            out,
            "  n{i} [label=\"{}\\n{}\"];",
            escape(&node_label(tree, n)),
            n.weight
        );
    }
    for (i, n) in s.nodes().iter().enumerate() {
        if let Some(p) = n.parent {
            let _ = writeln!(out, "  n{p} -> n{i};");
        }
    }
    out.push_str("}\n");
    out
}
