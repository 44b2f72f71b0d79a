use crate::error::{Error, Result};

/// prec@K, rec@K and ndcg@K of one event with a single relevant item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopKMetrics {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
}

/// Metrics for a relevant item at 1-based `rank`.
pub fn metrics_for_rank(rank: usize, ks: &[usize]) -> Vec<TopKMetrics> {
    assert!(rank >= 1, "ranks are 1-based");
    ks.iter()
        .map(|&k| {
            let hit = rank <= k;
            TopKMetrics {
                k,
                precision: if hit { 1.0 / k as f64 } else { 0.0 },
                recall: if hit { 1.0 } else { 0.0 },
                ndcg: if hit { 1.0 / ((rank + 1) as f64).log2() } else { 0.0 },
            }
        })
        .collect()
}

/// Metrics of `true_item` within a full ranking (best first).
pub fn metrics_for_event(ranked: &[usize], true_item: usize, ks: &[usize]) -> Result<Vec<TopKMetrics>> {
    let pos = ranked
        .iter()
        .position(|&i| i == true_item)
        .ok_or_else(|| Error::InvalidArgument(format!("true item {true_item} is not in the candidate ranking")))?;
    Ok(metrics_for_rank(pos + 1, ks))
}
