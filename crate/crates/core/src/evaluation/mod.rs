//! Partition agreement, goodness of fit and leave-one-block-out validation.

mod cv;
mod gof;

pub use cv::{loo_block_cv, LooConfig, LooFold};
pub use gof::{gof, quantile, BinSummary, Family, FamilyReport, FamilySummary, GofReport, COVERED_SHARE};

use log::warn;

use crate::error::{Error, Result};
use crate::network::BlockAssignment;

/// Pair counts of two partitions: `n11` co-clustered in both, `n10` only in
/// the first, `n01` only in the second, `n00` in neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

fn pairs(c: u64) -> u64 {
    c * c.saturating_sub(1) / 2
}

/// Pair counts from the contingency table of the two labelings.
pub fn pair_counts(a: &BlockAssignment, b: &BlockAssignment) -> Result<PairCounts> {
    if a.n_nodes() != b.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_nodes(),
            found: b.n_nodes(),
        });
    }
    let (ka, kb) = (a.n_blocks(), b.n_blocks());
    let mut table = vec![0u64; ka * kb];
    for i in 0..a.n_nodes() {
        table[a.block_of(i) * kb + b.block_of(i)] += 1;
    }
    let n11: u64 = table.iter().map(|&c| pairs(c)).sum();
    let same_a: u64 = a.sizes().iter().map(|&s| pairs(s as u64)).sum();
    let same_b: u64 = b.sizes().iter().map(|&s| pairs(s as u64)).sum();
    let total = pairs(a.n_nodes() as u64);
    let n10 = same_a - n11;
    let n01 = same_b - n11;
    Ok(PairCounts {
        n11,
        n10,
        n01,
        n00: total - n11 - n10 - n01,
    })
}

/// Yule's φ between a reference partition and an estimate.
pub fn yules_phi(z_star: &BlockAssignment, z: &BlockAssignment) -> Result<f64> {
    let PairCounts { n11, n10, n01, n00 } = pair_counts(z_star, z)?;
    let (n11, n10, n01, n00) = (n11 as i128, n10 as i128, n01 as i128, n00 as i128);
    let left = (n11 + n10) * (n01 + n00);
    let right = (n11 + n01) * (n10 + n00);
    if left == 0 || right == 0 {
        warn!("Yule's phi is undefined when a partition co-clusters all or no pairs; returning 0");
        return Ok(0.0);
    }
    let num = (n11 * n00 - n10 * n01) as f64;
    let den = if left == right {
        left as f64
    } else {
        (left as f64).sqrt() * (right as f64).sqrt()
    };
    Ok((num / den).clamp(-1.0, 1.0))
}
