//! Brute-force ground truth for small trees.
//!
//! Enumerates every k-node summary tree with arbitrary group sets. A group of
//! a single child covers exactly the same nodes as that child's collapsed
//! subtree, so groups are enumerated with two or more children only and each
//! distinct partition appears once.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::entropy::entropy;
use crate::summary::{classify_group, GroupShape, Piece, SummaryTree};
use crate::tree::CanonicalTree;

pub const DEFAULT_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("tree has {n} nodes, enumeration cap is {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
}

type Nodes = Vec<(Piece, Option<usize>)>;

/// Result of an exhaustive search at one `k`.
#[derive(Debug, Clone)]
pub struct BruteForce {
    /// Maximum entropy over all summary trees.
    pub max: f64,
    pub witness: SummaryTree,
    /// Maximum over trees whose group sets are prefixes or near-prefixes.
    pub restricted_max: f64,
    /// Maximum over trees whose group sets are prefixes.
    pub prefix_max: f64,
    /// Number of summary trees enumerated.
    pub count: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle { cap: DEFAULT_CAP }
    }
}

struct Enumerator<'a> {
    tree: &'a CanonicalTree,
    memo: HashMap<(usize, usize), Rc<Vec<Nodes>>>,
}

impl<'a> Enumerator<'a> {
    fn trees(&mut self, v: usize, k: usize) -> Rc<Vec<Nodes>> {
        if let Some(r) = self.memo.get(&(v, k)) {
            return r.clone();
        }
        let tree = self.tree;
        let mut out = Vec::new();
        if k == 1 {
            out.push(vec![(Piece::Collapse(v), None)]);
        } else if k <= tree.count(v) && !tree.is_leaf(v) {
            for forest in self.forests(v, k - 1) {
                let mut t = Vec::with_capacity(k);
                t.push((Piece::Singleton(v), None));
                for (p, parent) in forest {
                    t.push((p, Some(parent.map_or(0, |q| q + 1))));
                }
                out.push(t);
            }
        }
        let out = Rc::new(out);
        self.memo.insert((v, k), out.clone());
        out
    }

    /// Forests over all children of `v` with `m` nodes; top-level parents are `None`.
    fn forests(&mut self, v: usize, m: usize) -> Vec<Nodes> {
        let kids: Vec<usize> = self.tree.children(v).collect();
        let d = kids.len();
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << d) {
            let grouped = mask.count_ones() as usize;
            if grouped == 1 {
                continue;
            }
            let group: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).map(|i| kids[i]).collect();
            let rest: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 0).map(|i| kids[i]).collect();
            let budget = m as isize - isize::from(grouped > 0);
            if budget < rest.len() as isize {
                continue;
            }
            let mut base: Nodes = Vec::new();
            if !group.is_empty() {
                base.push((Piece::Group { parent: v, roots: group }, None));
            }
            self.distribute(&rest, budget as usize, base, &mut out);
        }
        out
    }

    fn distribute(&mut self, rest: &[usize], budget: usize, acc: Nodes, out: &mut Vec<Nodes>) {
        let Some((&c, tail)) = rest.split_first() else {
            if budget == 0 {
                out.push(acc);
            }
            return;
        };
        let max_here = budget.saturating_sub(tail.len()).min(self.tree.count(c));
        for a in 1..=max_here {
            let options = self.trees(c, a);
            for sub in options.iter() {
                let mut next = acc.clone();
                let shift = next.len();
                for (p, parent) in sub {
                    next.push((p.clone(), parent.map(|q| q + shift)));
                }
                self.distribute(tail, budget - a, next, out);
            }
        }
    }
}

fn piece_weight(tree: &CanonicalTree, p: &Piece) -> f64 {
    match p {
        Piece::Collapse(v) => tree.size(*v),
        Piece::Singleton(v) => tree.weight(*v),
        Piece::Group { roots, .. } => roots.iter().map(|&r| tree.size(r)).sum(),
    }
}

impl Oracle {
    fn check(&self, t: &CanonicalTree, k: usize) -> Result<(), OracleError> {
        if t.len() > self.cap || t.len() > 63 {
            return Err(OracleError::TooLarge {
                n: t.len(),
                cap: self.cap,
            });
        }
        if k == 0 || k > t.len() {
            return Err(OracleError::KOutOfRange { k, n: t.len() });
        }
        Ok(())
    }

    fn raw(&self, t: &CanonicalTree, k: usize) -> Result<Vec<Nodes>, OracleError> {
        self.check(t, k)?;
        let mut e = Enumerator {
            tree: t,
            memo: HashMap::new(),
        };
        Ok(e.trees(t.root(), k).as_ref().clone())
    }

    /// Every k-node summary tree of `t`, each exactly once.
    pub fn enumerate_all(&self, t: &CanonicalTree, k: usize) -> Result<Vec<SummaryTree>, OracleError> {
        Ok(self
            .raw(t, k)?
            .into_iter()
            .map(|nodes| SummaryTree::from_pieces(t, nodes, t.weights()))
            .collect())
    }

    pub fn brute_force_opt(&self, t: &CanonicalTree, k: usize) -> Result<BruteForce, OracleError> {
        let all = self.raw(t, k)?;
        let total = t.total_weight();
        let mut best = (f64::NEG_INFINITY, 0usize);
        let mut restricted = f64::NEG_INFINITY;
        let mut prefix = f64::NEG_INFINITY;
        for (i, nodes) in all.iter().enumerate() {
            let parts: Vec<f64> = nodes.iter().map(|(p, _)| piece_weight(t, p)).collect();
            let h = entropy(&parts, total).expect("partition weights sum to W").0;
            if h > best.0 {
                best = (h, i);
            }
            let mut near_ok = true;
            let mut prefix_ok = true;
            for (p, _) in nodes {
                if let Piece::Group { parent, roots } = p {
                    match classify_group(t, *parent, roots) {
                        GroupShape::Prefix(_) => {}
                        GroupShape::NearPrefix { .. } => prefix_ok = false,
                        GroupShape::Irregular => {
                            prefix_ok = false;
                            near_ok = false;
                        }
                    }
                }
            }
            if near_ok {
                restricted = restricted.max(h);
            }
            if prefix_ok {
                prefix = prefix.max(h);
            }
        }
        let witness = SummaryTree::from_pieces(t, all[best.1].clone(), t.weights());
        Ok(BruteForce {
            max: best.0,
            witness,
            restricted_max: restricted,
            prefix_max: prefix,
            count: all.len(),
        })
    }
}

pub fn enumerate_all(t: &CanonicalTree, k: usize) -> Result<Vec<SummaryTree>, OracleError> {
    Oracle::default().enumerate_all(t, k)
}

pub fn brute_force_opt(t: &CanonicalTree, k: usize) -> Result<BruteForce, OracleError> {
    Oracle::default().brute_force_opt(t, k)
}

/// Number of k-node summary trees of `T_v` for every `k`, index `k - 1`,
/// by a generating-function recurrence that never builds a tree.
pub fn count_summary_trees(t: &CanonicalTree, v: usize) -> Vec<u128> {
    let n = t.count(v);
    let mut out = vec![0u128; n];
    out[0] = 1;
    if t.is_leaf(v) {
        return out;
    }
    // poly[g][m]: ways to summarize the children seen so far with m nodes
    // outside the group and min(g, 2) children inside it.
    let mut poly = [vec![1u128], vec![0u128], vec![0u128]];
    for c in t.children(v) {
        let sub = count_summary_trees(t, c);
        let mut next = [vec![0u128; 1], vec![0u128; 1], vec![0u128; 1]];
        let len = poly[0].len() + sub.len();
        for p in next.iter_mut() {
            p.resize(len, 0);
        }
        for g in 0..3 {
            for (m, &ways) in poly[g].iter().enumerate() {
                if ways == 0 {
                    continue;
                }
                // c joins the group
                next[(g + 1).min(2)][m] += ways;
                // c summarized on its own with x nodes
                for (x, &s) in sub.iter().enumerate() {
                    next[g][m + x + 1] += ways * s;
                }
            }
        }
        poly = next;
    }
    for (m, &ways) in poly[0].iter().enumerate() {
        if m >= 1 && m < n {
            out[m] += ways;
        }
    }
    for (m, &ways) in poly[2].iter().enumerate() {
        if m + 2 <= n {
            out[m + 1] += ways;
        }
    }
    out
}
