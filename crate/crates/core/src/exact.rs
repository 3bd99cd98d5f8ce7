//! Exact maximum-entropy summary trees for every `k <= K`.
//!
//! Bottom-up over the canonical tree, each node `v` gets a table `F(v, k)` of
//! optimal pseudo-entropies for `1 <= k <= min(K, n_v)`. A `k`-node summary
//! of `T_v` is either `T_v` collapsed (`k = 1`) or `{v}` above a
//! `(k-1)`-node summary forest of its children. Forests are built by sweeping
//! the children in sorted order with a max-plus convolution, once for each
//! candidate class of the group set `other_v`:
//!
//! * the prefix class, `{v_1..v_i}` (including no group at all);
//! * for each `j` in `max(3, d-K+3) ..= d`, the near-prefix class
//!   `{v_1..v_i, v_j}`, which seeds the group with `T_{v_j}` and skips `v_j`
//!   in the sweep.
//!
//! Optimal summaries only ever need these classes. With `k <= K`, at most
//! `K - 2` children can sit outside the group, so when `d >= K` the smallest
//! `d - K + 1` children are placed in the group up front and never swept.
//!
//! The greedy variant runs the same machinery with the prefix class alone.

use std::collections::HashMap;

use thiserror::Error;

use crate::entropy::{plogp, EntropyBits};
use crate::summary::{Piece, SummaryTree};
use crate::tree::CanonicalTree;

/// Choice marker: the one-node forest is the group of everything swept so far.
const GROUP: u16 = u16::MAX;
const NEG: f64 = f64::NEG_INFINITY;
/// Largest supported `K`; choice records are 16-bit.
pub const MAX_K: usize = (u16::MAX - 1) as usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("K must be between 1 and {MAX_K}, got {0}")]
    InvalidK(usize),
    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("near-prefix index j = {j} out of range {lo}..={hi}")]
    ClassOutOfRange { j: usize, lo: usize, hi: usize },
}

/// Candidate family for the group set of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtherClass {
    Prefix,
    /// Near-prefix with non-prefix element `v_j` (1-based sorted position).
    NearPrefix(usize),
}

impl OtherClass {
    fn encode(self) -> u32 {
        match self {
            OtherClass::Prefix => 0,
            OtherClass::NearPrefix(j) => j as u32,
        }
    }

    fn decode(c: u32) -> Self {
        match c {
            0 => OtherClass::Prefix,
            j => OtherClass::NearPrefix(j as usize),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Prefix and near-prefix classes.
    Exact,
    /// Prefix class only.
    Greedy,
}

/// Work accounting for a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounter {
    /// `sum min(n_{v_1}+..+n_{v_i}, K) * min(n_{v_{i+1}}, K)` over the steps
    /// of the prefix sweep at every node. Bounded by `2Kn`.
    pub pair_cost: u64,
    /// Max-plus inner-loop evaluations across all classes.
    pub maxplus_ops: u64,
}

/// A zero-weight chain collapsed into a table shift: `F(top, k + offset) =
/// F(bottom, k)` and `F(top, j) = F(bottom, 1)` for `j <= offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shortcut {
    pub bottom: usize,
    pub offset: usize,
}

/// Optimal pseudo-entropy tables with reconstruction records.
#[derive(Debug, Clone)]
pub struct DpTables {
    k_max: usize,
    total: f64,
    mode: Mode,
    offsets: Vec<usize>,
    values: Vec<f64>,
    classes: Vec<u32>,
    alloc_start: Vec<usize>,
    alloc: Vec<u16>,
    shortcuts: HashMap<usize, Shortcut>,
    cost: CostCounter,
}

impl DpTables {
    fn empty(tree: &CanonicalTree, k_max: usize, mode: Mode, skip: &[bool]) -> Self {
        let n = tree.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for v in 0..n {
            offsets.push(acc);
            if !skip.get(v).copied().unwrap_or(false) {
                acc += k_max.min(tree.count(v));
            }
        }
        offsets.push(acc);
        DpTables {
            k_max,
            total: tree.total_weight(),
            mode,
            offsets,
            values: vec![NEG; acc],
            classes: vec![u32::MAX; acc],
            alloc_start: vec![usize::MAX; acc],
            alloc: Vec::new(),
            shortcuts: HashMap::new(),
            cost: CostCounter::default(),
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn cost(&self) -> CostCounter {
        self.cost
    }

    /// `F(v, k)` for `k = 1..`; empty for nodes skipped inside a shortcut.
    pub fn table(&self, v: usize) -> &[f64] {
        &self.values[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn value(&self, v: usize, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.table(v).get(k - 1).copied()
    }

    /// Largest `k` with a root value, `min(K, n)`.
    pub fn max_k(&self) -> usize {
        self.table(0).len()
    }

    /// Entropy of the optimal `k`-node summary of the whole tree.
    pub fn root_entropy(&self, k: usize) -> Option<EntropyBits> {
        // At the root pseudo-entropy and entropy coincide.
        self.value(0, k).map(|v| EntropyBits(v.max(0.0)))
    }

    /// Which class produced `F(v, k)`, `k >= 2`.
    pub fn choice(&self, v: usize, k: usize) -> Option<OtherClass> {
        if k < 2 || k > self.table(v).len() {
            return None;
        }
        let c = self.classes[self.offsets[v] + k - 1];
        (c != u32::MAX).then(|| OtherClass::decode(c))
    }
}

/// Forest table of one class sweep at a node.
#[derive(Debug, Clone)]
pub struct ForestTable {
    /// `values[m]`: best `m`-node forest, `-inf` if unreachable.
    pub values: Vec<f64>,
    /// Children folded into the group before the sweep.
    pub seed: Vec<usize>,
    /// Children swept, in order.
    pub swept: Vec<usize>,
    choices: Vec<u16>,
}

impl ForestTable {
    fn width(&self) -> usize {
        self.values.len()
    }

    /// Nodes given to each swept child in the best `m`-node forest; 0 means
    /// the child sits in the group.
    pub fn allocation(&self, m: usize) -> Vec<u16> {
        let width = self.width();
        let mut alloc = vec![0u16; self.swept.len()];
        let mut t = self.swept.len();
        let mut mm = m;
        while t > 0 {
            let ch = self.choices[(t - 1) * width + mm];
            if ch == GROUP {
                break;
            }
            alloc[t - 1] = (mm - ch as usize) as u16;
            mm = ch as usize;
            t -= 1;
        }
        alloc
    }
}

/// One step of a sweep: extend forests over the processed children (`prev`,
/// indexed by node count, `prev_max` the largest reachable count) by one
/// more child with optimal tree table `child` (`child[x-1]` for `x` nodes).
/// `group` is the value of the single group node absorbing everything swept
/// so far. Writes `out[0..]` and `choice[0..]` (same width as `out`) and
/// returns the new largest reachable count together with the number of
/// max-plus evaluations.
pub fn maxplus_step(
    prev: &[f64],
    prev_max: usize,
    child: &[f64],
    group: f64,
    out: &mut [f64],
    choice: &mut [u16],
) -> (usize, u64) {
    let cap = out.len() - 1;
    let new_max = cap.min(prev_max + child.len());
    out.fill(NEG);
    choice.fill(0);
    if cap >= 1 {
        out[1] = group;
        choice[1] = GROUP;
    }
    let mut ops = 0u64;
    for m in 1..=new_max {
        let hi = prev_max.min(m - 1);
        let lo = m.saturating_sub(child.len());
        let mut best = out[m];
        let mut arg = choice[m];
        for h in lo..=hi {
            ops += 1;
            let p = prev[h];
            if p == NEG {
                continue;
            }
            let val = p + child[m - h - 1];
            if val > best {
                best = val;
                arg = h as u16;
            }
        }
        out[m] = best;
        choice[m] = arg;
    }
    (new_max, ops)
}

fn forced_count(d: usize, k_max: usize) -> usize {
    // a - 1 with a = max(1, d - K + 2)
    (d + 2).saturating_sub(k_max).max(1) - 1
}

/// Valid near-prefix positions `j` at a node of degree `d`.
pub fn near_prefix_range(d: usize, k_max: usize) -> std::ops::RangeInclusive<usize> {
    let lo = 3.max(forced_count(d, k_max) + 2);
    lo..=d
}

fn sweep_class(
    tree: &CanonicalTree,
    v: usize,
    class: OtherClass,
    tables: &DpTables,
    cost: Option<&mut CostCounter>,
) -> ForestTable {
    let k_max = tables.k_max;
    let d = tree.degree(v);
    let width = k_max.saturating_sub(1).min(tree.count(v) - 1) + 1;
    let forced = forced_count(d, k_max);
    let mut seed: Vec<usize> = (1..=forced).map(|i| tree.child(v, i)).collect();
    let skip = match class {
        OtherClass::Prefix => None,
        OtherClass::NearPrefix(j) => {
            seed.push(tree.child(v, j));
            Some(j)
        }
    };
    let swept: Vec<usize> = (forced + 1..=d)
        .filter(|&i| Some(i) != skip)
        .map(|i| tree.child(v, i))
        .collect();

    let mut cum: f64 = seed.iter().map(|&c| tree.size(c)).sum();
    let mut prev = vec![NEG; width];
    let mut prev_max;
    if seed.is_empty() {
        prev[0] = 0.0;
        prev_max = 0;
    } else {
        if width > 1 {
            prev[1] = plogp(cum, tables.total);
        }
        prev_max = 1.min(width - 1);
    }

    // Counts of all sorted children to the left, for the cost bound.
    let mut left_count: usize = (1..=forced).map(|i| tree.count(tree.child(v, i))).sum();
    let mut cost = cost;

    let mut choices = vec![0u16; swept.len() * width];
    let mut out = vec![NEG; width];
    for (t, &c) in swept.iter().enumerate() {
        cum += tree.size(c);
        let child = tables.table(c);
        let child = &child[..child.len().min(width - 1)];
        let (new_max, ops) = maxplus_step(
            &prev,
            prev_max,
            child,
            plogp(cum, tables.total),
            &mut out,
            &mut choices[t * width..(t + 1) * width],
        );
        if let Some(cost) = cost.as_deref_mut() {
            cost.maxplus_ops += ops;
            if class == OtherClass::Prefix {
                let kk = k_max as u64;
                cost.pair_cost += (left_count as u64).min(kk) * (tree.count(c) as u64).min(kk);
            }
        }
        left_count += tree.count(c);
        std::mem::swap(&mut prev, &mut out);
        prev_max = new_max;
    }

    ForestTable {
        values: prev,
        seed,
        swept,
        choices,
    }
}

/// Forest table for prefix group sets at `v`. Children of `v` must already
/// have complete tables.
pub fn sweep_prefix_class(tree: &CanonicalTree, v: usize, tables: &DpTables) -> ForestTable {
    sweep_class(tree, v, OtherClass::Prefix, tables, None)
}

/// Forest table for near-prefix group sets at `v` whose non-prefix element
/// is the `j`-th smallest child.
pub fn sweep_near_prefix_class(
    tree: &CanonicalTree,
    v: usize,
    j: usize,
    tables: &DpTables,
) -> Result<ForestTable, SolveError> {
    let range = near_prefix_range(tree.degree(v), tables.k_max);
    if !range.contains(&j) {
        return Err(SolveError::ClassOutOfRange {
            j,
            lo: *range.start(),
            hi: *range.end(),
        });
    }
    Ok(sweep_class(tree, v, OtherClass::NearPrefix(j), tables, None))
}

fn process_node(tree: &CanonicalTree, v: usize, tables: &mut DpTables, mode: Mode) {
    let off = tables.offsets[v];
    let len = tables.offsets[v + 1] - off;
    let total = tables.total;
    tables.values[off] = plogp(tree.size(v), total);
    if len <= 1 {
        return;
    }

    let mut classes = vec![OtherClass::Prefix];
    if mode == Mode::Exact {
        classes.extend(near_prefix_range(tree.degree(v), tables.k_max).map(OtherClass::NearPrefix));
    }

    let mut cost = tables.cost;
    let forests: Vec<ForestTable> = classes
        .iter()
        .map(|&c| sweep_class(tree, v, c, tables, Some(&mut cost)))
        .collect();
    tables.cost = cost;

    let own = plogp(tree.weight(v), total);
    for k in 2..=len {
        let m = k - 1;
        let mut best = 0;
        for (i, f) in forests.iter().enumerate().skip(1) {
            if f.values[m] > forests[best].values[m] {
                best = i;
            }
        }
        let f = &forests[best];
        debug_assert!(f.values[m] > NEG, "unreachable forest size at node {v}");
        tables.values[off + k - 1] = own + f.values[m];
        tables.classes[off + k - 1] = classes[best].encode();
        tables.alloc_start[off + k - 1] = tables.alloc.len();
        let alloc = f.allocation(m);
        tables.alloc.extend_from_slice(&alloc);
    }
}

fn check_k(k_max: usize) -> Result<(), SolveError> {
    if k_max == 0 || k_max > MAX_K {
        return Err(SolveError::InvalidK(k_max));
    }
    Ok(())
}

/// Run the dynamic program. `skip` marks nodes hidden inside shortcuts.
pub(crate) fn solve_with(
    tree: &CanonicalTree,
    k_max: usize,
    mode: Mode,
    shortcuts: HashMap<usize, Shortcut>,
    skip: &[bool],
) -> Result<DpTables, SolveError> {
    check_k(k_max)?;
    let mut tables = DpTables::empty(tree, k_max, mode, skip);
    for v in (0..tree.len()).rev() {
        if skip.get(v).copied().unwrap_or(false) {
            continue;
        }
        if let Some(sc) = shortcuts.get(&v) {
            let off = tables.offsets[v];
            let len = tables.offsets[v + 1] - off;
            let bottom = tables.table(sc.bottom).to_vec();
            for k in 1..=len {
                let from = if k <= sc.offset { 1 } else { k - sc.offset };
                tables.values[off + k - 1] = bottom[from - 1];
            }
            continue;
        }
        process_node(tree, v, &mut tables, mode);
    }
    tables.shortcuts = shortcuts;
    Ok(tables)
}

/// Optimal pseudo-entropy tables over all summary trees, `k <= min(K, n)`.
pub fn solve_exact(tree: &CanonicalTree, k_max: usize) -> Result<DpTables, SolveError> {
    solve_with(tree, k_max, Mode::Exact, HashMap::new(), &[])
}

/// Summary pieces (with parent piece indices) of the optimal `k`-node tree.
pub(crate) fn pieces(
    tree: &CanonicalTree,
    tables: &DpTables,
    k: usize,
) -> Result<Vec<(Piece, Option<usize>)>, SolveError> {
    let max = tables.max_k();
    if k == 0 || k > max {
        return Err(SolveError::KOutOfRange { k, max });
    }
    let mut out: Vec<(Piece, Option<usize>)> = Vec::with_capacity(k);
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(tree.root(), k, None)];
    while let Some((v, budget, parent)) = stack.pop() {
        if let Some(sc) = tables.shortcuts.get(&v) {
            walk_shortcut(tree, v, *sc, budget, parent, &mut out, &mut stack);
            continue;
        }
        if budget == 1 {
            out.push((Piece::Collapse(v), parent));
            continue;
        }
        let here = out.len();
        out.push((Piece::Singleton(v), parent));
        let idx = tables.offsets[v] + budget - 1;
        let class = OtherClass::decode(tables.classes[idx]);
        let d = tree.degree(v);
        let forced = forced_count(d, tables.k_max);
        let mut group: Vec<usize> = (1..=forced).map(|i| tree.child(v, i)).collect();
        let skip = match class {
            OtherClass::Prefix => None,
            OtherClass::NearPrefix(j) => {
                group.push(tree.child(v, j));
                Some(j)
            }
        };
        let swept = (forced + 1..=d).filter(|&i| Some(i) != skip).map(|i| tree.child(v, i));
        let start = tables.alloc_start[idx];
        for (t, c) in swept.enumerate() {
            match tables.alloc[start + t] {
                0 => group.push(c),
                a => stack.push((c, a as usize, Some(here))),
            }
        }
        match group.len() {
            0 => {}
            1 => out.push((Piece::Collapse(group[0]), Some(here))),
            _ => out.push((Piece::Group { parent: v, roots: group }, Some(here))),
        }
    }
    Ok(out)
}

/// Expand a shortcut chain: each chain node becomes a singleton and each
/// zero-weight side leaf its own node until the budget runs out, then the
/// bottom node takes the rest.
fn walk_shortcut(
    tree: &CanonicalTree,
    top: usize,
    sc: Shortcut,
    budget: usize,
    parent: Option<usize>,
    out: &mut Vec<(Piece, Option<usize>)>,
    stack: &mut Vec<(usize, usize, Option<usize>)>,
) {
    let mut x = top;
    let mut r = budget;
    let mut parent = parent;
    loop {
        if x == sc.bottom {
            stack.push((x, r, parent));
            return;
        }
        if r == 1 {
            out.push((Piece::Collapse(x), parent));
            return;
        }
        let here = out.len();
        out.push((Piece::Singleton(x), parent));
        r -= 1;
        let kids = tree.children(x);
        let next = kids.end - 1;
        if kids.len() == 2 {
            let leaf = kids.start;
            if r == 1 {
                out.push((Piece::Group { parent: x, roots: vec![leaf, next] }, Some(here)));
                return;
            }
            out.push((Piece::Collapse(leaf), Some(here)));
            r -= 1;
        }
        x = next;
        parent = Some(here);
    }
}

/// Materialize the optimal `k`-node summary tree.
pub fn reconstruct(tree: &CanonicalTree, tables: &DpTables, k: usize) -> Result<SummaryTree, SolveError> {
    let p = pieces(tree, tables, k)?;
    Ok(SummaryTree::from_pieces(tree, p, tree.weights()))
}
