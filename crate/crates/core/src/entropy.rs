//! Entropy and pseudo-entropy in bits.
//!
//! Pseudo-entropy normalizes by the weight of the whole tree rather than the
//! subtree being summarized, which makes it additive over the nodes of a
//! summary forest. For a summary of a subtree with weight `W_v` inside a
//! tree of weight `W`:
//!
//! ```text
//! ent = (W / W_v) * pent - lg(W / W_v)
//! ```
//!
//! so the two objectives share maximizers.

use thiserror::Error;

/// Relative tolerance on `sum(weights) == total`.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("total weight must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("weights sum to {sum}, expected {total}")]
    SumMismatch { sum: f64, total: f64 },
    #[error("weight {weight} exceeds reference total {total}")]
    WeightExceedsTotal { weight: f64, total: f64 },
    #[error("negative weight {0}")]
    NegativeWeight(f64),
}

/// Entropy measured in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct EntropyBits(pub f64);

impl EntropyBits {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Pseudo-entropy relative to a fixed reference total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoEntropy {
    pub value: f64,
    pub total: f64,
}

impl std::ops::Add for PseudoEntropy {
    type Output = PseudoEntropy;

    fn add(self, rhs: PseudoEntropy) -> PseudoEntropy {
        debug_assert_eq!(self.total, rhs.total);
        PseudoEntropy {
            value: self.value + rhs.value,
            total: self.total,
        }
    }
}

/// `-(w/W) lg(w/W)` with `0 lg 0 = 0`. No argument checks; the DP calls this
/// in its inner loops.
#[inline]
pub fn plogp(weight: f64, total: f64) -> f64 {
    if weight <= 0.0 {
        return 0.0;
    }
    let p = weight / total;
    -p * p.log2()
}

/// Shannon entropy of the distribution `weights / total`.
pub fn entropy(weights: &[f64], total: f64) -> Result<EntropyBits, EntropyError> {
    if total.is_nan() || total <= 0.0 {
        return Err(EntropyError::NonPositiveTotal(total));
    }
    let mut sum = 0.0;
    for &w in weights {
        if w < 0.0 {
            return Err(EntropyError::NegativeWeight(w));
        }
        sum += w;
    }
    if (sum - total).abs() > SUM_TOLERANCE * total {
        return Err(EntropyError::SumMismatch { sum, total });
    }
    let h: f64 = weights.iter().map(|&w| plogp(w, total)).sum();
    Ok(EntropyBits(h.max(0.0)))
}

/// Contribution of one summary node of weight `weight` to a tree of total `total`.
pub fn node_pseudo_entropy(weight: f64, total: f64) -> Result<PseudoEntropy, EntropyError> {
    if total.is_nan() || total <= 0.0 {
        return Err(EntropyError::NonPositiveTotal(total));
    }
    if weight < 0.0 {
        return Err(EntropyError::NegativeWeight(weight));
    }
    if weight > total * (1.0 + SUM_TOLERANCE) {
        return Err(EntropyError::WeightExceedsTotal { weight, total });
    }
    Ok(PseudoEntropy {
        value: plogp(weight.min(total), total),
        total,
    })
}

/// Convert pseudo-entropy of a summary of a subtree of weight `subtree_total`
/// (inside a tree of weight `total`) into that summary's own entropy.
pub fn pseudo_to_entropy(
    p: PseudoEntropy,
    total: f64,
    subtree_total: f64,
) -> Result<EntropyBits, EntropyError> {
    if subtree_total.is_nan() || subtree_total <= 0.0 {
        return Err(EntropyError::NonPositiveTotal(subtree_total));
    }
    if total.is_nan() || total <= 0.0 {
        return Err(EntropyError::NonPositiveTotal(total));
    }
    if subtree_total == total {
        return Ok(EntropyBits(p.value));
    }
    let ratio = total / subtree_total;
    Ok(EntropyBits(ratio * p.value - ratio.log2()))
}
