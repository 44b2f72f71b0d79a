//! Deterministic top-K selection shared by every scorer.

use std::cmp::Ordering;

/// Descending score, then ascending item index.
pub fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top `k` of `(item, score)` pairs under [`rank_order`].
pub fn top_k(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    let k = k.min(scored.len());
    if k == 0 {
        return Vec::new();
    }
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    scored
}

/// 1-based position `target` would take in the full ranking of `candidates`
/// under [`rank_order`]. `None` when `target` is not a candidate.
pub fn rank_of(scores: &[f64], candidates: &[usize], target: usize) -> Option<usize> {
    if !candidates.contains(&target) {
        return None;
    }
    let t = (target, scores[target]);
    let ahead = candidates
        .iter()
        .filter(|&&c| c != target && rank_order(&(c, scores[c]), &t) == Ordering::Less)
        .count();
    Some(ahead + 1)
}
