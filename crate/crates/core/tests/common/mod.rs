#![allow(dead_code)]

use proptest::prelude::*;
use sumtree::generate::{random_tree, Shape, Weights};
use sumtree::{build_tree, canonicalize, CanonicalTree, NodeRecord};

pub const TOL: f64 = 1e-9;

/// Parent of node `i` is `parents[i - 1] % i`.
pub fn from_parts(parents: &[usize], weights: &[f64]) -> CanonicalTree {
    let n = weights.len();
    let records = (0..n)
        .map(|i| {
            let parent = (i > 0).then(|| format!("n{}", parents[i - 1] % i));
            NodeRecord {
                id: format!("n{i}"),
                parent,
                weight: weights[i],
            }
        })
        .collect();
    canonicalize(&build_tree(records).unwrap())
}

/// Random tree with `1..=max_n` nodes and integer weights in `0..=max_w`,
/// never all zero.
pub fn int_tree(max_n: usize, max_w: u32) -> impl Strategy<Value = CanonicalTree> {
    (1..=max_n)
        .prop_flat_map(move |n| {
            (
                prop::collection::vec(any::<usize>(), n - 1),
                prop::collection::vec(0..=max_w, n),
                0..n,
            )
        })
        .prop_map(|(parents, mut w, bump)| {
            if w.iter().all(|&x| x == 0) {
                w[bump] = 1;
            }
            let w: Vec<f64> = w.into_iter().map(f64::from).collect();
            from_parts(&parents, &w)
        })
}

/// Random tree with real weights in `[0, 10)`; roughly a quarter are zero.
pub fn real_tree(max_n: usize) -> impl Strategy<Value = CanonicalTree> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(any::<usize>(), n - 1),
                prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0..10.0f64], n),
            )
        })
        .prop_map(|(parents, mut w)| {
            if w.iter().all(|&x| x == 0.0) {
                w[0] = 1.0;
            }
            from_parts(&parents, &w)
        })
}

pub fn seeded(n: usize, shape: Shape, weights: Weights, seed: u64) -> CanonicalTree {
    canonicalize(&random_tree(n, shape, weights, seed))
}

/// Weights of every node in `T_v`, by independent recursion over parents.
pub fn brute_size(t: &CanonicalTree, v: usize) -> f64 {
    (0..t.len())
        .filter(|&u| {
            let mut x = Some(u);
            while let Some(y) = x {
                if y == v {
                    return true;
                }
                x = t.parent(y);
            }
            false
        })
        .map(|u| t.weight(u))
        .sum()
}

pub fn lg(x: f64) -> f64 {
    x.log2()
}

/// Entropy straight from the definition.
pub fn direct_entropy(parts: &[f64]) -> f64 {
    let total: f64 = parts.iter().sum();
    -parts
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| (p / total) * (p / total).log2())
        .sum::<f64>()
}
