//! Reproducible random trees for tests and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tree::{build_tree, InputTree, NodeRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Node `i` attaches to a uniformly random earlier node.
    Uniform,
    /// Complete tree where every internal node has this many children.
    FixedDegree(usize),
    /// Node `i` attaches uniformly to one of the first `max(1, i/width)`
    /// nodes, which gives bushy, shallow trees.
    Bushy(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weights {
    Unit,
    /// Uniform integers in `0..=max`.
    Integer(u32),
    /// Uniform reals in `[0, 1)`.
    Real,
    /// Heavy-tailed `u^(-1/alpha)`.
    Pareto(f64),
}

fn draw(rng: &mut ChaCha8Rng, w: Weights) -> f64 {
    match w {
        Weights::Unit => 1.0,
        Weights::Integer(max) => rng.gen_range(0..=max) as f64,
        Weights::Real => rng.gen::<f64>(),
        Weights::Pareto(alpha) => {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            u.powf(-1.0 / alpha)
        }
    }
}

/// Random tree with `n >= 1` nodes and positive total weight. Node ids are
/// `n0, n1, ..` with `n0` the root.
pub fn random_tree(n: usize, shape: Shape, weights: Weights, seed: u64) -> InputTree {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents: Vec<Option<usize>> = (0..n)
        .map(|i| match (i, shape) {
            (0, _) => None,
            (_, Shape::Uniform) => Some(rng.gen_range(0..i)),
            (_, Shape::FixedDegree(d)) => Some((i - 1) / d.max(1)),
            (_, Shape::Bushy(width)) => Some(rng.gen_range(0..(i / width.max(1)).max(1))),
        })
        .collect();
    let mut w: Vec<f64> = (0..n).map(|_| draw(&mut rng, weights)).collect();
    while w.iter().sum::<f64>() <= 0.0 {
        let i = rng.gen_range(0..n);
        w[i] = draw(&mut rng, weights);
        if matches!(weights, Weights::Integer(0)) {
            w[i] = 1.0;
        }
    }
    let records = (0..n)
        .map(|i| NodeRecord {
            id: format!("n{i}"),
            parent: parents[i].map(|p| format!("n{p}")),
            weight: w[i],
        })
        .collect();
    build_tree(records).expect("generated tree is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = random_tree(50, Shape::Uniform, Weights::Real, 7);
        let b = random_tree(50, Shape::Uniform, Weights::Real, 7);
        let c = random_tree(50, Shape::Uniform, Weights::Real, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fixed_degree_shape() {
        let t = random_tree(7, Shape::FixedDegree(2), Weights::Unit, 0);
        assert_eq!(t.parent(6), Some(2));
        assert_eq!(t.total_weight(), 7.0);
    }

    #[test]
    fn integer_weights_positive_total() {
        for seed in 0..50 {
            let t = random_tree(2, Shape::Uniform, Weights::Integer(1), seed);
            assert!(t.total_weight() > 0.0);
        }
        assert!(random_tree(3, Shape::Bushy(2), Weights::Integer(0), 1).total_weight() > 0.0);
    }
}
