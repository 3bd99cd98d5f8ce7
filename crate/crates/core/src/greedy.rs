//! Greedy summary trees: the exact dynamic program with every group set
//! restricted to a prefix of the size-sorted children.
//!
//! When a node has `d >= K` children the smallest ones are folded into the
//! group before the sweep, so only the largest `K - 1` children are processed
//! individually and the total work stays within `O(Kn)` max-plus steps.

use std::collections::HashMap;

use crate::exact::{solve_with, DpTables, Mode, SolveError};
use crate::tree::CanonicalTree;

/// Optimal tables over prefix-restricted summary trees. Reconstruct with
/// [`crate::exact::reconstruct`].
pub fn solve_greedy(tree: &CanonicalTree, k_max: usize) -> Result<DpTables, SolveError> {
    solve_with(tree, k_max, Mode::Greedy, HashMap::new(), &[])
}
