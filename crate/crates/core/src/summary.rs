//! Summary trees: the output of every solver.
//!
//! A k-node summary tree partitions the input nodes into k parts. Each part
//! is one of
//!
//! * a singleton `{v}`,
//! * a collapsed subtree `T_v` (reported as a singleton when `v` is a leaf),
//! * a group holding two or more children of some `v` together with all of
//!   their descendants; it hangs below the singleton `{v}`.
//!
//! Every summary node has at most one group child.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{entropy, EntropyBits};
use crate::tree::CanonicalTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Singleton,
    Subtree,
    Group,
}

/// Intermediate description of one summary node, in tree labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Collapse(usize),
    Singleton(usize),
    Group { parent: usize, roots: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryNode {
    pub kind: NodeKind,
    /// `[v]` for singletons and subtrees; the grouped children for a group.
    pub roots: Vec<usize>,
    /// Covered labels, ascending.
    pub members: Vec<usize>,
    pub weight: f64,
    pub parent: Option<usize>,
}

impl SummaryNode {
    /// Smallest covered label; parents always sort before children.
    pub fn representative(&self) -> usize {
        self.roots.iter().copied().min().unwrap_or(usize::MAX)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummaryError {
    #[error("summary tree has no nodes")]
    Empty,
    #[error("expected exactly one root summary node covering the tree root")]
    BadRoot,
    #[error("node {0} is covered {1} times")]
    NotPartition(usize, usize),
    #[error("summary node {0}: {1}")]
    Malformed(usize, &'static str),
    #[error("summary node {0} has more than one group child")]
    TwoGroups(usize),
    #[error("summary node {index} weight {weight} does not match members' {expected}")]
    WeightMismatch { index: usize, weight: f64, expected: f64 },
    #[error("stored entropy {stored} differs from recomputed {recomputed}")]
    EntropyMismatch { stored: f64, recomputed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTree {
    nodes: Vec<SummaryNode>,
    entropy: EntropyBits,
}

/// Position of a group's child set among its parent's sorted children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupShape {
    /// `{v_1..v_i}`.
    Prefix(usize),
    /// `{v_1..v_i} ∪ {v_j}` with `j >= i + 2`.
    NearPrefix { prefix: usize, extra: usize },
    Irregular,
}

/// Classify a set of children of `parent` (labels) by their 1-based sorted positions.
pub fn classify_group(tree: &CanonicalTree, parent: usize, roots: &[usize]) -> GroupShape {
    let first = tree.children(parent).start;
    let mut pos: Vec<usize> = roots.iter().map(|&c| c - first + 1).collect();
    pos.sort_unstable();
    let mut i = 0;
    while i < pos.len() && pos[i] == i + 1 {
        i += 1;
    }
    match pos.len() - i {
        0 => GroupShape::Prefix(i),
        1 if pos[i] >= i + 2 => GroupShape::NearPrefix {
            prefix: i,
            extra: pos[i],
        },
        _ => GroupShape::Irregular,
    }
}

impl SummaryTree {
    /// Materialize pieces (with parent piece indices) against `tree`, taking
    /// node weights from `weights` (indexed by label).
    pub fn from_pieces(
        tree: &CanonicalTree,
        pieces: Vec<(Piece, Option<usize>)>,
        weights: &[f64],
    ) -> SummaryTree {
        let mut nodes: Vec<SummaryNode> = pieces
            .iter()
            .map(|(piece, parent)| {
                let (kind, roots) = match piece {
                    Piece::Singleton(v) => (NodeKind::Singleton, vec![*v]),
                    Piece::Collapse(v) if tree.is_leaf(*v) => (NodeKind::Singleton, vec![*v]),
                    Piece::Collapse(v) => (NodeKind::Subtree, vec![*v]),
                    Piece::Group { roots, .. } if roots.len() == 1 => {
                        let v = roots[0];
                        let kind = if tree.is_leaf(v) {
                            NodeKind::Singleton
                        } else {
                            NodeKind::Subtree
                        };
                        (kind, vec![v])
                    }
                    Piece::Group { roots, .. } => {
                        let mut r = roots.clone();
                        r.sort_unstable();
                        (NodeKind::Group, r)
                    }
                };
                let mut members: Vec<usize> = match kind {
                    NodeKind::Singleton => vec![roots[0]],
                    _ => roots.iter().flat_map(|&r| tree.subtree(r).iter().copied()).collect(),
                };
                members.sort_unstable();
                let weight = members.iter().map(|&m| weights[m]).sum();
                SummaryNode {
                    kind,
                    roots,
                    members,
                    weight,
                    parent: *parent,
                }
            })
            .collect();

        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| nodes[i].representative());
        let mut new_index = vec![0; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        for node in nodes.iter_mut() {
            node.parent = node.parent.map(|p| new_index[p]);
        }
        let mut slots: Vec<Option<SummaryNode>> = nodes.into_iter().map(Some).collect();
        let nodes: Vec<SummaryNode> = order.iter().map(|&i| slots[i].take().unwrap()).collect();

        let total: f64 = weights.iter().sum();
        let entropy = node_entropy(&nodes, total);
        SummaryTree { nodes, entropy }
    }

    pub fn nodes(&self) -> &[SummaryNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entropy(&self) -> EntropyBits {
        self.entropy
    }

    /// Entropy of the same partition under different node weights.
    pub fn entropy_with(&self, weights: &[f64]) -> EntropyBits {
        let total: f64 = weights.iter().sum();
        let parts: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| n.members.iter().map(|&m| weights[m]).sum())
            .collect();
        entropy(&parts, total).unwrap_or_default()
    }

    /// Grouped children of `v`, if `{v}` is a singleton with a group child.
    pub fn other_of(&self, v: usize) -> Option<&[usize]> {
        let idx = self
            .nodes
            .iter()
            .position(|n| n.kind == NodeKind::Singleton && n.roots[0] == v)?;
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Group && n.parent == Some(idx))
            .map(|n| n.roots.as_slice())
    }

    /// Sorted (kind, members) list for structural comparison.
    pub fn canonical_form(&self) -> Vec<(NodeKind, Vec<usize>)> {
        let mut v: Vec<_> = self.nodes.iter().map(|n| (n.kind, n.members.clone())).collect();
        v.sort();
        v
    }

    /// Shapes of all group nodes.
    pub fn group_shapes(&self, tree: &CanonicalTree) -> Vec<GroupShape> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Group)
            .map(|n| {
                let p = tree.parent(n.roots[0]).expect("group root has a parent");
                classify_group(tree, p, &n.roots)
            })
            .collect()
    }

    /// Check every structural invariant against `tree` with node weights `weights`.
    pub fn validate(&self, tree: &CanonicalTree, weights: &[f64]) -> Result<(), SummaryError> {
        if self.nodes.is_empty() {
            return Err(SummaryError::Empty);
        }
        let roots: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].parent.is_none())
            .collect();
        if roots.len() != 1 || self.nodes[roots[0]].roots != [tree.root()] {
            return Err(SummaryError::BadRoot);
        }

        let mut cover = vec![0usize; tree.len()];
        for n in &self.nodes {
            for &m in &n.members {
                cover[m] += 1;
            }
        }
        if let Some(v) = cover.iter().position(|&c| c != 1) {
            return Err(SummaryError::NotPartition(v, cover[v]));
        }

        let mut group_children = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            let expected: HashSet<usize> = match n.kind {
                NodeKind::Singleton => {
                    if n.roots.len() != 1 {
                        return Err(SummaryError::Malformed(i, "singleton must have one root"));
                    }
                    HashSet::from([n.roots[0]])
                }
                NodeKind::Subtree => {
                    if n.roots.len() != 1 || tree.is_leaf(n.roots[0]) {
                        return Err(SummaryError::Malformed(i, "subtree must be one non-leaf root"));
                    }
                    tree.subtree(n.roots[0]).iter().copied().collect()
                }
                NodeKind::Group => {
                    if n.roots.len() < 2 {
                        return Err(SummaryError::Malformed(i, "group needs two or more roots"));
                    }
                    let p = tree.parent(n.roots[0]);
                    if p.is_none() || n.roots.iter().any(|&r| tree.parent(r) != p) {
                        return Err(SummaryError::Malformed(i, "group roots are not siblings"));
                    }
                    n.roots
                        .iter()
                        .flat_map(|&r| tree.subtree(r).iter().copied())
                        .collect()
                }
            };
            if expected.len() != n.members.len() || n.members.iter().any(|m| !expected.contains(m)) {
                return Err(SummaryError::Malformed(i, "members do not match kind"));
            }
            let w: f64 = n.members.iter().map(|&m| weights[m]).sum();
            if (w - n.weight).abs() > 1e-9 * w.abs().max(1.0) {
                return Err(SummaryError::WeightMismatch {
                    index: i,
                    weight: n.weight,
                    expected: w,
                });
            }

            if let Some(p) = n.parent {
                let pn = self.nodes.get(p).ok_or(SummaryError::Malformed(i, "parent out of range"))?;
                let tree_parent = tree.parent(n.roots[0]);
                if pn.kind != NodeKind::Singleton || tree_parent != Some(pn.roots[0]) {
                    return Err(SummaryError::Malformed(i, "parent is not the singleton of the tree parent"));
                }
                if n.kind == NodeKind::Group {
                    group_children[p] += 1;
                    if group_children[p] > 1 {
                        return Err(SummaryError::TwoGroups(p));
                    }
                }
            } else if n.kind == NodeKind::Group {
                return Err(SummaryError::BadRoot);
            }
        }

        let total: f64 = weights.iter().sum();
        let recomputed = node_entropy(&self.nodes, total).0;
        let stored = self.entropy.0;
        if (recomputed - stored).abs() > 1e-9 {
            return Err(SummaryError::EntropyMismatch { stored, recomputed });
        }
        Ok(())
    }
}

fn node_entropy(nodes: &[SummaryNode], total: f64) -> EntropyBits {
    let parts: Vec<f64> = nodes.iter().map(|n| n.weight).collect();
    entropy(&parts, total).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{canonical_from_records, NodeRecord};

    fn star() -> CanonicalTree {
        canonical_from_records(vec![
            NodeRecord::new("r", None, 1.0),
            NodeRecord::new("a", Some("r"), 1.0),
            NodeRecord::new("b", Some("r"), 2.0),
            NodeRecord::new("c", Some("r"), 3.0),
        ])
        .unwrap()
    }

    #[test]
    fn group_shapes() {
        let t = star();
        assert_eq!(classify_group(&t, 0, &[1, 2]), GroupShape::Prefix(2));
        assert_eq!(classify_group(&t, 0, &[1, 3]), GroupShape::NearPrefix { prefix: 1, extra: 3 });
        assert_eq!(classify_group(&t, 0, &[3]), GroupShape::NearPrefix { prefix: 0, extra: 3 });
        assert_eq!(classify_group(&t, 0, &[2, 3]), GroupShape::Irregular);
    }

    #[test]
    fn valid_and_invalid() {
        let t = star();
        let w = t.weights().to_vec();
        let s = SummaryTree::from_pieces(
            &t,
            vec![
                (Piece::Singleton(0), None),
                (Piece::Group { parent: 0, roots: vec![1, 3] }, Some(0)),
                (Piece::Collapse(2), Some(0)),
            ],
            &w,
        );
        s.validate(&t, &w).unwrap();
        assert_eq!(s.other_of(0), Some(&[1, 3][..]));
        let e = entropy(&[1.0, 4.0, 2.0], 7.0).unwrap().0;
        assert!((s.entropy().0 - e).abs() < 1e-12);

        let missing = SummaryTree::from_pieces(
            &t,
            vec![(Piece::Singleton(0), None), (Piece::Group { parent: 0, roots: vec![1, 3] }, Some(0))],
            &w,
        );
        assert!(matches!(missing.validate(&t, &w), Err(SummaryError::NotPartition(2, 0))));

        let two_groups = canonical_from_records(vec![
            NodeRecord::new("r", None, 1.0),
            NodeRecord::new("a", Some("r"), 1.0),
            NodeRecord::new("b", Some("r"), 1.0),
            NodeRecord::new("c", Some("r"), 1.0),
            NodeRecord::new("d", Some("r"), 1.0),
        ])
        .unwrap();
        let w2 = two_groups.weights().to_vec();
        let bad = SummaryTree::from_pieces(
            &two_groups,
            vec![
                (Piece::Singleton(0), None),
                (Piece::Group { parent: 0, roots: vec![1, 2] }, Some(0)),
                (Piece::Group { parent: 0, roots: vec![3, 4] }, Some(0)),
            ],
            &w2,
        );
        assert!(matches!(bad.validate(&two_groups, &w2), Err(SummaryError::TwoGroups(0))));
    }
}
