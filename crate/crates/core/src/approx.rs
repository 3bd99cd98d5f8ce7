//! Additive-ε approximation through integer rounding.
//!
//! Pipeline:
//!
//! 1. rescale the weights to sum to an integer `W0` that depends only on `K`
//!    and `ε` ([`compute_w0`], [`rescale`]);
//! 2. round every weight to its floor or ceiling so that each subtree sum
//!    moves by at most 1 and the total stays `W0` ([`discrepancy_round`]);
//! 3. drop zero-size subtrees behind one placeholder leaf per parent and
//!    turn chains of zero-weight nodes into table shifts ([`reduce_tree`]);
//! 4. run the exact program on the reduced tree and map its summaries back
//!    onto the original nodes ([`solve_approx`]).
//!
//! With `n >> W0` almost every node rounds to zero, and the reduced tree has
//! `O(W0)` nodes that need real work.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::exact::{pieces, solve_with, DpTables, Mode, Shortcut, SolveError};
use crate::summary::{Piece, SummaryTree};
use crate::tree::CanonicalTree;

pub const DEFAULT_W0_CONSTANT: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("W0 constant must be positive and finite, got {0}")]
    InvalidConstant(f64),
    #[error("K must be at least 1")]
    InvalidK,
    #[error("W0 = {0} is too large")]
    W0TooLarge(f64),
    #[error("every rounded weight is zero")]
    AllZero,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// `max(2K, ceil((cK/ε) lg(2 + cK/ε)))`.
pub fn compute_w0(k_max: usize, epsilon: f64, c: f64) -> Result<u64, ApproxError> {
    if k_max == 0 {
        return Err(ApproxError::InvalidK);
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ApproxError::InvalidEpsilon(epsilon));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(ApproxError::InvalidConstant(c));
    }
    let x = c * k_max as f64 / epsilon;
    let w0 = (x * (2.0 + x).log2()).ceil();
    if w0.is_nan() || w0 >= 2f64.powi(52) {
        return Err(ApproxError::W0TooLarge(w0));
    }
    Ok((w0 as u64).max(2 * k_max as u64))
}

/// Weights scaled to total `w0`, indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub w0: u64,
    pub weights: Vec<f64>,
}

pub fn rescale(t: &CanonicalTree, w0: u64) -> Rescaled {
    let factor = w0 as f64 / t.total_weight();
    Rescaled {
        w0,
        weights: t.weights().iter().map(|w| w * factor).collect(),
    }
}

/// Integer weights with bounded subtree discrepancy.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedTree {
    pub w0: u64,
    /// Rescaled real weights.
    pub scaled: Vec<f64>,
    pub rounded: Vec<u64>,
    /// Subtree sums of `rounded`.
    pub rounded_size: Vec<u64>,
}

impl RoundedTree {
    pub fn rounded_f64(&self) -> Vec<f64> {
        self.rounded.iter().map(|&w| w as f64).collect()
    }
}

/// Round along the depth-first order: with prefix sums `c_i` rounded half up,
/// every prefix is off by at most 1/2 and every subtree (a contiguous
/// preorder interval) by at most 1.
pub fn discrepancy_round(t: &CanonicalTree, r: &Rescaled) -> RoundedTree {
    let n = t.len();
    let mut rounded = vec![0u64; n];
    let mut acc = 0.0f64;
    let mut prev_int = 0u64;
    let order = t.preorder();
    for (i, &v) in order.iter().enumerate() {
        acc += r.weights[v];
        let cur = if i + 1 == n {
            r.w0
        } else {
            (acc + 0.5).floor().max(0.0) as u64
        };
        rounded[v] = cur.saturating_sub(prev_int);
        prev_int = prev_int.max(cur);
    }
    let mut rounded_size = rounded.clone();
    for v in (1..n).rev() {
        let p = t.parent(v).unwrap();
        rounded_size[p] += rounded_size[v];
    }
    RoundedTree {
        w0: r.w0,
        scaled: r.weights.clone(),
        rounded,
        rounded_size,
    }
}

/// What a node of the reduced tree stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Node(usize),
    /// Zero-size children of `parent`, with everything below them.
    Placeholder { parent: usize, roots: Vec<usize> },
}

/// A maximal chain of zero-weight nodes, each with one child or with a
/// zero-weight leaf beside its single positive-size child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroPath {
    pub top: usize,
    /// Positive-size child of the last chain node.
    pub bottom: usize,
    /// Chain length `l`.
    pub len: usize,
    /// Chain nodes that carry a zero-weight leaf, `l'`.
    pub with_leaf: usize,
}

#[derive(Debug, Clone)]
pub struct ReducedTree {
    /// Reduced tree with rounded weights, in its own canonical labels.
    pub tree: CanonicalTree,
    pub origin: Vec<Origin>,
    pub paths: Vec<ZeroPath>,
}

impl ReducedTree {
    pub fn positive_nodes(&self) -> usize {
        (0..self.tree.len()).filter(|&v| self.tree.weight(v) > 0.0).count()
    }

    /// Zero-weight nodes with two or more positive-size children.
    pub fn zero_branching_nodes(&self) -> usize {
        (0..self.tree.len())
            .filter(|&v| {
                self.tree.weight(v) == 0.0
                    && self.tree.children(v).filter(|&c| self.tree.size(c) > 0.0).count() >= 2
            })
            .count()
    }

    fn is_placeholder(&self, v: usize) -> bool {
        matches!(self.origin[v], Origin::Placeholder { .. })
    }

    fn compressible(&self, v: usize) -> bool {
        let t = &self.tree;
        if t.weight(v) != 0.0 || self.is_placeholder(v) {
            return false;
        }
        match t.degree(v) {
            1 => true,
            2 => {
                let first = t.children(v).start;
                t.is_leaf(first) && t.size(first) == 0.0
            }
            _ => false,
        }
    }
}

pub fn reduce_tree(t: &CanonicalTree, rt: &RoundedTree) -> Result<ReducedTree, ApproxError> {
    let n = t.len();
    if rt.rounded_size[0] == 0 {
        return Err(ApproxError::AllZero);
    }

    // Provisional numbering: kept originals in label order, then placeholders.
    let mut new_of_old = vec![usize::MAX; n];
    let mut origin = Vec::new();
    for (v, slot) in new_of_old.iter_mut().enumerate() {
        if rt.rounded_size[v] > 0 {
            *slot = origin.len();
            origin.push(Origin::Node(v));
        }
    }
    let kept = origin.len();
    for v in 0..n {
        if rt.rounded_size[v] == 0 {
            continue;
        }
        let zero: Vec<usize> = t.children(v).filter(|&c| rt.rounded_size[c] == 0).collect();
        if !zero.is_empty() {
            origin.push(Origin::Placeholder { parent: v, roots: zero });
        }
    }
    let m = origin.len();
    let mut parent = vec![usize::MAX; m];
    let mut size = vec![0u64; m];
    let mut weight = vec![0u64; m];
    for (i, o) in origin.iter().enumerate() {
        match o {
            Origin::Node(v) => {
                size[i] = rt.rounded_size[*v];
                weight[i] = rt.rounded[*v];
                if let Some(p) = t.parent(*v) {
                    parent[i] = new_of_old[p];
                }
            }
            Origin::Placeholder { parent: p, .. } => parent[i] = new_of_old[*p],
        }
    }

    // Children sorted by (parent, size), stable in provisional order: two
    // counting passes.
    let entries: Vec<usize> = (1..m).filter(|&i| parent[i] != usize::MAX).collect();
    let by_size = counting_sort(&entries, rt.w0 as usize + 1, |i| size[i] as usize);
    let sorted = counting_sort(&by_size, m, |i| parent[i]);
    let mut child_start = vec![0usize; m + 1];
    for &i in &sorted {
        child_start[parent[i] + 1] += 1;
    }
    for i in 0..m {
        child_start[i + 1] += child_start[i];
    }

    // Breadth-first relabel.
    let mut order = Vec::with_capacity(m);
    let mut new_parent = Vec::with_capacity(m);
    order.push(0usize);
    new_parent.push(None);
    let mut head = 0;
    while head < order.len() {
        let i = order[head];
        for &c in &sorted[child_start[i]..child_start[i + 1]] {
            order.push(c);
            new_parent.push(Some(head));
        }
        head += 1;
    }
    debug_assert_eq!(order.len(), m);

    let taken: HashSet<&str> = t.ids().iter().map(String::as_str).collect();
    let ids: Vec<String> = order
        .iter()
        .map(|&i| match &origin[i] {
            Origin::Node(v) => t.id(*v).to_owned(),
            Origin::Placeholder { parent, .. } => {
                let mut id = format!("{}/*", t.id(*parent));
                while taken.contains(id.as_str()) {
                    id.push('*');
                }
                id
            }
        })
        .collect();
    let weights: Vec<f64> = order.iter().map(|&i| weight[i] as f64).collect();
    let origin: Vec<Origin> = order.iter().map(|&i| origin[i].clone()).collect();
    let tree = CanonicalTree::assemble(ids, weights, new_parent);
    debug_assert!(kept <= m);

    let mut reduced = ReducedTree {
        tree,
        origin,
        paths: Vec::new(),
    };
    let mut paths = Vec::new();
    for v in 0..reduced.tree.len() {
        if !reduced.compressible(v) {
            continue;
        }
        if let Some(p) = reduced.tree.parent(v) {
            if reduced.compressible(p) {
                continue;
            }
        }
        let (mut len, mut with_leaf, mut y) = (0, 0, v);
        while reduced.compressible(y) {
            len += 1;
            if reduced.tree.degree(y) == 2 {
                with_leaf += 1;
            }
            y = reduced.tree.children(y).end - 1;
        }
        paths.push(ZeroPath {
            top: v,
            bottom: y,
            len,
            with_leaf,
        });
    }
    reduced.paths = paths;
    Ok(reduced)
}

fn counting_sort(items: &[usize], buckets: usize, key: impl Fn(usize) -> usize) -> Vec<usize> {
    let mut count = vec![0usize; buckets + 1];
    for &i in items {
        count[key(i) + 1] += 1;
    }
    for b in 0..buckets {
        count[b + 1] += count[b];
    }
    let mut out = vec![0usize; items.len()];
    for &i in items {
        let k = key(i);
        out[count[k]] = i;
        count[k] += 1;
    }
    out
}

/// Dynamic program on the reduced tree with chain shortcuts.
pub fn solve_reduced(reduced: &ReducedTree, k_max: usize) -> Result<DpTables, SolveError> {
    let t = &reduced.tree;
    let mut skip = vec![false; t.len()];
    let mut shortcuts = HashMap::new();
    for p in &reduced.paths {
        shortcuts.insert(
            p.top,
            Shortcut {
                bottom: p.bottom,
                offset: p.len + p.with_leaf,
            },
        );
        let mut y = p.top;
        while y != p.bottom {
            let kids = t.children(y);
            if kids.len() == 2 {
                skip[kids.start] = true;
            }
            if y != p.top {
                skip[y] = true;
            }
            y = kids.end - 1;
        }
    }
    solve_with(t, k_max, Mode::Exact, shortcuts, &skip)
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub k: usize,
    pub summary: SummaryTree,
    /// Entropy under the original weights.
    pub entropy: f64,
    /// Entropy of the same partition under the rounded weights.
    pub rounded_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct ApproxSolution {
    pub w0: u64,
    pub rounded: RoundedTree,
    pub reduced: ReducedTree,
    pub tables: DpTables,
    pub results: Vec<ApproxResult>,
}

/// Map reduced-tree pieces to original labels.
fn map_back(reduced: &ReducedTree, src: Vec<(Piece, Option<usize>)>) -> Vec<(Piece, Option<usize>)> {
    let node = |x: usize| match &reduced.origin[x] {
        Origin::Node(v) => *v,
        Origin::Placeholder { .. } => unreachable!("placeholder used as a tree node"),
    };
    let mut from_placeholder = vec![false; src.len()];
    let mut out: Vec<(Piece, Option<usize>)> = src
        .into_iter()
        .enumerate()
        .map(|(i, (p, parent))| {
            let mapped = match p {
                Piece::Singleton(x) => Piece::Singleton(node(x)),
                Piece::Collapse(x) => match &reduced.origin[x] {
                    Origin::Node(v) => Piece::Collapse(*v),
                    Origin::Placeholder { roots, .. } if roots.len() == 1 => Piece::Collapse(roots[0]),
                    Origin::Placeholder { parent, roots } => {
                        from_placeholder[i] = true;
                        Piece::Group {
                            parent: *parent,
                            roots: roots.clone(),
                        }
                    }
                },
                Piece::Group { parent, roots } => Piece::Group {
                    parent: node(parent),
                    roots: roots
                        .iter()
                        .flat_map(|&r| match &reduced.origin[r] {
                            Origin::Node(v) => vec![*v],
                            Origin::Placeholder { roots, .. } => roots.clone(),
                        })
                        .collect(),
                },
            };
            (mapped, parent)
        })
        .collect();

    // A placeholder standing alone next to a real group would give its parent
    // two group children: split one zero-size child off and merge the rest.
    let mut groups_by_parent: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, (p, parent)) in out.iter().enumerate() {
        if let (Piece::Group { .. }, Some(q)) = (p, parent) {
            groups_by_parent.entry(*q).or_default().push(i);
        }
    }
    let mut conflicts: Vec<Vec<usize>> = groups_by_parent.into_values().filter(|g| g.len() > 1).collect();
    conflicts.sort();
    for g in conflicts {
        let (ph, real) = if from_placeholder[g[0]] { (g[0], g[1]) } else { (g[1], g[0]) };
        let Piece::Group { roots, .. } = &mut out[ph].0 else { unreachable!() };
        let mut roots = std::mem::take(roots);
        let first = roots.remove(0);
        out[ph].0 = Piece::Collapse(first);
        if let Piece::Group { roots: real_roots, .. } = &mut out[real].0 {
            real_roots.extend(roots);
        }
    }
    out
}

/// Split one summary node into two; false if every node is a single tree node.
fn split_once(t: &CanonicalTree, pieces: &mut Vec<(Piece, Option<usize>)>) -> bool {
    for i in 0..pieces.len() {
        match pieces[i].0.clone() {
            Piece::Collapse(v) if !t.is_leaf(v) => {
                pieces[i].0 = Piece::Singleton(v);
                let kids: Vec<usize> = t.children(v).collect();
                let child = if kids.len() == 1 {
                    Piece::Collapse(kids[0])
                } else {
                    Piece::Group { parent: v, roots: kids }
                };
                pieces.push((child, Some(i)));
                return true;
            }
            Piece::Group { parent, mut roots } if roots.len() >= 2 => {
                let last = roots.pop().unwrap();
                pieces[i].0 = if roots.len() == 1 {
                    Piece::Collapse(roots[0])
                } else {
                    Piece::Group { parent, roots }
                };
                let p = pieces[i].1;
                pieces.push((Piece::Collapse(last), p));
                return true;
            }
            _ => {}
        }
    }
    false
}

/// Approximate summaries for every `k <= min(K, n)`, each within `ε` of the
/// optimum when `W0` is large enough.
pub fn solve_approx(t: &CanonicalTree, k_max: usize, epsilon: f64, c: f64) -> Result<ApproxSolution, ApproxError> {
    let w0 = compute_w0(k_max, epsilon, c)?;
    let rounded = discrepancy_round(t, &rescale(t, w0));
    let reduced = reduce_tree(t, &rounded)?;
    let tables = solve_reduced(&reduced, k_max)?;
    let rounded_w = rounded.rounded_f64();

    let top = k_max.min(t.len());
    let reduced_max = tables.max_k();
    let mut results = Vec::with_capacity(top);
    let mut carried: Option<Vec<(Piece, Option<usize>)>> = None;
    for k in 1..=top {
        let p = if k <= reduced_max {
            map_back(&reduced, pieces(&reduced.tree, &tables, k)?)
        } else {
            let mut p = carried.take().expect("previous summary");
            let split = split_once(t, &mut p);
            debug_assert!(split);
            p
        };
        let summary = SummaryTree::from_pieces(t, p.clone(), t.weights());
        results.push(ApproxResult {
            k,
            entropy: summary.entropy().0,
            rounded_entropy: summary.entropy_with(&rounded_w).0,
            summary,
        });
        carried = Some(p);
    }
    Ok(ApproxSolution {
        w0,
        rounded,
        reduced,
        tables,
        results,
    })
}
