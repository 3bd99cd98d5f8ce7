//! Node-weighted rooted trees: validation and canonical form.
//!
//! A [`CanonicalTree`] relabels the input densely so that the root is label
//! 0, labels grow with depth, and the children of every node occupy a
//! contiguous label range sorted by nondecreasing subtree size. All solvers
//! work on this form. Labels are 0-based internally; output surfaces add 1.

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{id}` references missing parent `{parent}`")]
    MissingParent { id: String, parent: String },
    #[error("multiple roots: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("parent relation contains a cycle through `{0}`")]
    Cycle(String),
    #[error("node `{id}` has negative weight {weight}")]
    NegativeWeight { id: String, weight: f64 },
    #[error("node `{id}` has non-finite weight")]
    NonFiniteWeight { id: String },
    #[error("total weight is zero")]
    ZeroTotalWeight,
}

/// One input row: external id, optional parent id, weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub parent: Option<String>,
    pub weight: f64,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, parent: Option<&str>, weight: f64) -> Self {
        NodeRecord {
            id: id.into(),
            parent: parent.map(str::to_owned),
            weight,
        }
    }
}

/// A validated rooted tree in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTree {
    ids: Vec<String>,
    parent: Vec<Option<usize>>,
    weight: Vec<f64>,
    root: usize,
}

impl InputTree {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Records in input order, suitable for feeding back into [`build_tree`].
    pub fn records(&self) -> Vec<NodeRecord> {
        (0..self.len())
            .map(|i| NodeRecord {
                id: self.ids[i].clone(),
                parent: self.parent[i].map(|p| self.ids[p].clone()),
                weight: self.weight[i],
            })
            .collect()
    }

    /// Same shape and ids with every weight replaced by `f(old)`.
    pub fn map_weights(&self, f: impl Fn(f64) -> f64) -> Result<InputTree, TreeError> {
        let records = self
            .records()
            .into_iter()
            .map(|mut r| {
                r.weight = f(r.weight);
                r
            })
            .collect();
        build_tree(records)
    }

    fn children_lists(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        children
    }
}

/// Validate records into an [`InputTree`].
pub fn build_tree(records: Vec<NodeRecord>) -> Result<InputTree, TreeError> {
    if records.is_empty() {
        return Err(TreeError::Empty);
    }
    let mut index = HashMap::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if index.insert(r.id.as_str(), i).is_some() {
            return Err(TreeError::DuplicateId(r.id.clone()));
        }
        if !r.weight.is_finite() {
            return Err(TreeError::NonFiniteWeight { id: r.id.clone() });
        }
        if r.weight < 0.0 {
            return Err(TreeError::NegativeWeight {
                id: r.id.clone(),
                weight: r.weight,
            });
        }
    }

    let mut parent = Vec::with_capacity(records.len());
    let mut root: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        match &r.parent {
            Some(p) => {
                let &pi = index.get(p.as_str()).ok_or_else(|| TreeError::MissingParent {
                    id: r.id.clone(),
                    parent: p.clone(),
                })?;
                parent.push(Some(pi));
            }
            None => {
                if let Some(prev) = root {
                    return Err(TreeError::MultipleRoots(
                        records[prev].id.clone(),
                        r.id.clone(),
                    ));
                }
                root = Some(i);
                parent.push(None);
            }
        }
    }

    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let weight: Vec<f64> = records.iter().map(|r| r.weight).collect();
    // With every node parented, following parents from any node must loop.
    let Some(root) = root else {
        return Err(TreeError::Cycle(ids[0].clone()));
    };

    let tree = InputTree {
        ids,
        parent,
        weight,
        root,
    };
    let children = tree.children_lists();
    let mut seen = vec![false; tree.len()];
    let mut stack = vec![root];
    seen[root] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for &c in &children[v] {
            if !seen[c] {
                seen[c] = true;
                reached += 1;
                stack.push(c);
            }
        }
    }
    if reached != tree.len() {
        let stray = seen.iter().position(|s| !s).unwrap();
        return Err(TreeError::Cycle(tree.ids[stray].clone()));
    }
    if tree.total_weight() <= 0.0 {
        return Err(TreeError::ZeroTotalWeight);
    }
    Ok(tree)
}

/// A tree relabeled breadth-first with size-sorted sibling ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTree {
    ids: Vec<String>,
    weight: Vec<f64>,
    size: Vec<f64>,
    count: Vec<usize>,
    parent: Vec<Option<usize>>,
    first_child: Vec<usize>,
    degree: Vec<usize>,
    preorder: Vec<usize>,
    pre_index: Vec<usize>,
    total: f64,
}

/// Canonicalize: sizes, counts, size-sorted children (ties by external id)
/// and breadth-first relabeling.
pub fn canonicalize(t: &InputTree) -> CanonicalTree {
    let n = t.len();
    let mut children = t.children_lists();

    // Input-order BFS to get a bottom-up order for size accumulation.
    let mut order = Vec::with_capacity(n);
    order.push(t.root);
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        order.extend_from_slice(&children[v]);
    }
    let mut size = t.weight.clone();
    for &v in order.iter().rev() {
        if let Some(p) = t.parent[v] {
            size[p] += size[v];
        }
    }

    for list in children.iter_mut() {
        list.sort_by(|&a, &b| {
            size[a]
                .partial_cmp(&size[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| t.ids[a].cmp(&t.ids[b]))
        });
    }

    let mut old_of_new = Vec::with_capacity(n);
    let mut new_parent = Vec::with_capacity(n);
    old_of_new.push(t.root);
    new_parent.push(None);
    let mut head = 0;
    while head < old_of_new.len() {
        let v = old_of_new[head];
        for &c in &children[v] {
            old_of_new.push(c);
            new_parent.push(Some(head));
        }
        head += 1;
    }

    let ids = old_of_new.iter().map(|&o| t.ids[o].clone()).collect();
    let weight = old_of_new.iter().map(|&o| t.weight[o]).collect();
    CanonicalTree::assemble(ids, weight, new_parent)
}

impl CanonicalTree {
    /// Build from nodes that are already in canonical label order: `parent[v]
    /// < v`, siblings contiguous and in the intended sorted order, labels
    /// breadth-first. Sizes and counts are recomputed.
    pub(crate) fn assemble(ids: Vec<String>, weight: Vec<f64>, parent: Vec<Option<usize>>) -> Self {
        let n = ids.len();
        let mut size = weight.clone();
        let mut count = vec![1usize; n];
        let mut first_child = vec![usize::MAX; n];
        let mut degree = vec![0usize; n];
        for v in (1..n).rev() {
            let p = parent[v].expect("non-root without parent");
            debug_assert!(p < v);
            size[p] += size[v];
            count[p] += count[v];
            degree[p] += 1;
            first_child[p] = v;
        }
        for v in 0..n {
            if degree[v] == 0 {
                first_child[v] = n;
            }
        }

        // Preorder with children visited in canonical order.
        let mut preorder = Vec::with_capacity(n);
        let mut pre_index = vec![0usize; n];
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            pre_index[v] = preorder.len();
            preorder.push(v);
            let fc = first_child[v];
            for c in (fc..fc + degree[v]).rev() {
                stack.push(c);
            }
        }

        let total = size[0];
        CanonicalTree {
            ids,
            weight,
            size,
            count,
            parent,
            first_child,
            degree,
            preorder,
            pre_index,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weight[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Sum of weights in the subtree of `v`.
    pub fn size(&self, v: usize) -> f64 {
        self.size[v]
    }

    /// Number of nodes in the subtree of `v`, including `v`.
    pub fn count(&self, v: usize) -> usize {
        self.count[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Children of `v` in nondecreasing size order.
    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let fc = self.first_child[v];
        fc..fc + self.degree[v]
    }

    /// `i`-th child of `v`, 1-based in sorted order.
    pub fn child(&self, v: usize, i: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.degree[v]);
        self.first_child[v] + i - 1
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.degree[v] == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// Depth-first preorder, children in canonical order.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// All labels in the subtree of `v`, in preorder.
    pub fn subtree(&self, v: usize) -> &[usize] {
        let start = self.pre_index[v];
        &self.preorder[start..start + self.count[v]]
    }

    pub fn is_ancestor_or_self(&self, a: usize, v: usize) -> bool {
        let (ia, iv) = (self.pre_index[a], self.pre_index[v]);
        iv >= ia && iv < ia + self.count[a]
    }

    pub fn lookup(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Back to input form, in label order.
    pub fn to_input_tree(&self) -> InputTree {
        InputTree {
            ids: self.ids.clone(),
            parent: self.parent.clone(),
            weight: self.weight.clone(),
            root: 0,
        }
    }

    /// Same shape with replacement weights (indexed by label), re-canonicalized.
    pub fn with_weights(&self, weights: &[f64]) -> Result<CanonicalTree, TreeError> {
        assert_eq!(weights.len(), self.len());
        let records = (0..self.len())
            .map(|v| NodeRecord {
                id: self.ids[v].clone(),
                parent: self.parent[v].map(|p| self.ids[p].clone()),
                weight: weights[v],
            })
            .collect();
        Ok(canonicalize(&build_tree(records)?))
    }
}

/// Convenience: [`build_tree`] followed by [`canonicalize`].
pub fn canonical_from_records(records: Vec<NodeRecord>) -> Result<CanonicalTree, TreeError> {
    Ok(canonicalize(&build_tree(records)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, parent: Option<&str>, w: f64) -> NodeRecord {
        NodeRecord::new(id, parent, w)
    }

    #[test]
    fn star_of_three() {
        let t = build_tree(vec![rec("r", None, 1.0), rec("a", Some("r"), 1.0), rec("b", Some("r"), 1.0)]).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.total_weight(), 3.0);
    }

    #[test]
    fn zero_total_rejected() {
        assert_eq!(build_tree(vec![rec("r", None, 0.0)]), Err(TreeError::ZeroTotalWeight));
    }

    #[test]
    fn two_cycle_rejected() {
        let err = build_tree(vec![rec("a", Some("b"), 1.0), rec("b", Some("a"), 1.0)]).unwrap_err();
        assert!(matches!(err, TreeError::Cycle(_)));
    }

    #[test]
    fn cycle_beside_root_rejected() {
        let err = build_tree(vec![
            rec("r", None, 1.0),
            rec("a", Some("b"), 1.0),
            rec("b", Some("a"), 1.0),
        ])
        .unwrap_err();
        assert!(matches!(err, TreeError::Cycle(_)));
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(build_tree(vec![]), Err(TreeError::Empty));
        assert!(matches!(
            build_tree(vec![rec("r", None, 1.0), rec("r", Some("r"), 1.0)]),
            Err(TreeError::DuplicateId(_))
        ));
        assert!(matches!(
            build_tree(vec![rec("r", None, 1.0), rec("a", Some("x"), 1.0)]),
            Err(TreeError::MissingParent { .. })
        ));
        assert!(matches!(
            build_tree(vec![rec("r", None, 1.0), rec("s", None, 1.0)]),
            Err(TreeError::MultipleRoots(..))
        ));
        assert!(matches!(
            build_tree(vec![rec("r", None, 1.0), rec("a", Some("r"), -1.0)]),
            Err(TreeError::NegativeWeight { .. })
        ));
        assert!(matches!(
            build_tree(vec![rec("r", None, f64::NAN)]),
            Err(TreeError::NonFiniteWeight { .. })
        ));
    }

    #[test]
    fn star_children_sorted_by_size() {
        let c = canonical_from_records(vec![
            rec("r", None, 1.0),
            rec("a", Some("r"), 3.0),
            rec("b", Some("r"), 1.0),
            rec("c", Some("r"), 2.0),
        ])
        .unwrap();
        let order: Vec<&str> = c.children(0).map(|v| c.id(v)).collect();
        assert_eq!(order, ["b", "c", "a"]);
        assert_eq!(c.size(0), 7.0);
        assert_eq!(c.count(0), 4);
    }

    #[test]
    fn path_sizes_and_counts() {
        let c = canonical_from_records(vec![
            rec("y", Some("x"), 1.0),
            rec("x", Some("r"), 1.0),
            rec("r", None, 1.0),
        ])
        .unwrap();
        assert_eq!(c.id(0), "r");
        assert_eq!((c.size(0), c.size(1), c.size(2)), (3.0, 2.0, 1.0));
        assert_eq!(c.count(0), 3);
        assert_eq!(c.subtree(1), &[1, 2]);
    }

    #[test]
    fn ties_broken_by_id() {
        let c = canonical_from_records(vec![
            rec("r", None, 0.0),
            rec("z", Some("r"), 1.0),
            rec("m", Some("r"), 1.0),
            rec("a", Some("r"), 1.0),
        ])
        .unwrap();
        let order: Vec<&str> = c.children(0).map(|v| c.id(v)).collect();
        assert_eq!(order, ["a", "m", "z"]);
    }
}
