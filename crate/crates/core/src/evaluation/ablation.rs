use std::collections::BTreeMap;

use crate::corpus::{Dataset, InteractionEvent};
use crate::error::Result;
use crate::evaluation::{evaluate_with, EvalOptions, GroupScorer, MetricsReport};

/// Which impact weights decide the removed members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalPolicy {
    /// The group's own impact weights.
    PerGroup,
    /// Each user's mean impact over all evaluated groups they belong to.
    Global,
}

/// Drops the `k_remove` members with the highest impact (ties: lower user
/// index first). A group that would be emptied keeps its single lowest-impact
/// member. Survivors keep their original order.
pub fn reduce_group(members: &[usize], impact: &[f64], k_remove: usize) -> Vec<usize> {
    assert_eq!(members.len(), impact.len());
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| impact[b].total_cmp(&impact[a]).then(members[a].cmp(&members[b])));
    let removed = k_remove.min(members.len() - 1);
    let mut keep = vec![true; members.len()];
    for &pos in &order[..removed] {
        keep[pos] = false;
    }
    members.iter().zip(keep).filter_map(|(&m, k)| k.then_some(m)).collect()
}

fn global_impact<S: GroupScorer + ?Sized>(scorer: &S, events: &[InteractionEvent]) -> BTreeMap<usize, f64> {
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for ev in events {
        for (&u, b) in ev.members.iter().zip(scorer.impact(&ev.members)) {
            let e = sums.entry(u).or_default();
            e.0 += b;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(u, (s, c))| (u, s / c as f64)).collect()
}

/// Re-evaluates every event after removing its `k_remove` most influential
/// members. The candidate set still follows the original member set.
pub fn ablation_remove_top_users<S: GroupScorer + ?Sized>(
    scorer: &S,
    ds: &Dataset,
    events: &[InteractionEvent],
    k_remove: usize,
    policy: RemovalPolicy,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    if k_remove == 0 {
        return evaluate_with(scorer, ds, events, opts, |ev| ev.members.clone());
    }
    match policy {
        RemovalPolicy::PerGroup => evaluate_with(scorer, ds, events, opts, |ev| {
            reduce_group(&ev.members, &scorer.impact(&ev.members), k_remove)
        }),
        RemovalPolicy::Global => {
            let table = global_impact(scorer, events);
            evaluate_with(scorer, ds, events, opts, |ev| {
                let impact: Vec<f64> = ev.members.iter().map(|u| table[u]).collect();
                reduce_group(&ev.members, &impact, k_remove)
            })
        }
    }
}
