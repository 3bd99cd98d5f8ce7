//! Maximum-entropy summary trees.
//!
//! Given a rooted tree with nonnegative node weights, a k-node summary tree
//! merges whole subtrees and groups of sibling subtrees into single nodes.
//! This crate finds summaries of maximum entropy for every `k <= K`:
//!
//! * [`exact::solve_exact`]: optimal for real weights in `O(K^2 n + n log n)`;
//! * [`greedy::solve_greedy`]: the same program restricted to prefix groups;
//! * [`approx::solve_approx`]: within an additive `ε` through integer rounding;
//! * [`oracle`]: exhaustive enumeration for checking the above on small trees.
//!
//! ```
//! use sumtree::{canonical_from_records, reconstruct, solve_exact, NodeRecord};
//!
//! let tree = canonical_from_records(vec![
//!     NodeRecord::new("root", None, 1.0),
//!     NodeRecord::new("a", Some("root"), 2.0),
//!     NodeRecord::new("b", Some("root"), 1.0),
//! ])
//! .unwrap();
//! let tables = solve_exact(&tree, 3).unwrap();
//! let best = reconstruct(&tree, &tables, 2).unwrap();
//! assert_eq!(best.len(), 2);
//! ```

pub mod approx;
pub mod cli;
pub mod entropy;
pub mod exact;
pub mod generate;
pub mod greedy;
pub mod input;
pub mod oracle;
pub mod summary;
pub mod tree;

pub use approx::{solve_approx, ApproxError, ApproxSolution};
pub use entropy::{entropy, EntropyBits, PseudoEntropy};
pub use exact::{reconstruct, solve_exact, CostCounter, DpTables, SolveError};
pub use greedy::solve_greedy;
pub use summary::{NodeKind, SummaryTree};
pub use tree::{build_tree, canonical_from_records, canonicalize, CanonicalTree, InputTree, NodeRecord, TreeError};
