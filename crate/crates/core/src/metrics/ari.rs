use std::collections::HashMap;

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table.
///
/// When both partitions are trivial in the same way the index is undefined
/// (0/0); that case returns 1.0.
pub fn ari(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("partitions cover {} and {} records", a.len(), b.len())));
    }
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    for (&x, &y) in a.cluster_of().iter().zip(b.cluster_of()) {
        *table.entry((x, y)).or_insert(0) += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = a.sizes().iter().map(|&s| pairs(s as u64)).sum();
    let sum_b: f64 = b.sizes().iter().map(|&s| pairs(s as u64)).sum();
    let expected = sum_a * sum_b / pairs(n).max(f64::MIN_POSITIVE);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}
