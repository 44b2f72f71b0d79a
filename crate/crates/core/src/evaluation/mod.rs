//! Top-K evaluation, significance testing, the impact-removal ablation and
//! the group-size breakdown.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::corpus::{Dataset, InteractionEvent};
use crate::error::{Error, Result};
use crate::ranking::rank_order;

mod ablation;
mod breakdown;
mod metrics;
pub mod report;
mod scorer;
mod ttest;

pub use ablation::{ablation_remove_top_users, reduce_group, RemovalPolicy};
pub use breakdown::{group_size_breakdown, SizeBin, DEFAULT_BINS};
pub use metrics::{metrics_for_event, metrics_for_rank, TopKMetrics};
pub use scorer::{rank_items, CfScorer, GroupScorer, NeuralScorer};
pub use ttest::{paired_t_test, TTest};

pub const DEFAULT_KS: [usize; 3] = [5, 10, 20];

/// Which items compete with the true item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePolicy {
    /// Every item.
    Full,
    /// Every item except those the exact member set adopted in train. The
    /// true item always stays in.
    FullMinusTrain,
}

impl CandidatePolicy {
    pub fn name(self) -> &'static str {
        match self {
            CandidatePolicy::Full => "full",
            CandidatePolicy::FullMinusTrain => "full-minus-train",
        }
    }
}

impl std::str::FromStr for CandidatePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CandidatePolicy::Full),
            "full-minus-train" => Ok(CandidatePolicy::FullMinusTrain),
            other => Err(Error::InvalidArgument(format!("unknown candidate policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub policy: CandidatePolicy,
    pub ks: Vec<usize>,
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            policy: CandidatePolicy::FullMinusTrain,
            ks: DEFAULT_KS.to_vec(),
            threads: 1,
        }
    }
}

/// Outcome for one evaluated event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub event_id: String,
    /// Number of members that were scored.
    pub size: usize,
    /// 1-based rank of the true item among the candidates.
    pub rank: usize,
    pub metrics: Vec<TopKMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub model: String,
    pub seed: u64,
    pub config_hash: String,
    pub candidates: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub meta: ReportMeta,
    pub ks: Vec<usize>,
    pub records: Vec<EventRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl MetricsReport {
    pub fn aggregate(&self, k: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.k == k)
    }

    /// Aggregate ndcg@k, or NaN when `k` was not evaluated.
    pub fn ndcg(&self, k: usize) -> f64 {
        self.aggregate(k).map_or(f64::NAN, |a| a.ndcg)
    }

    /// Per-event values of one metric, in record order.
    pub fn per_event(&self, metric: Metric, k: usize) -> Vec<f64> {
        let idx = self.ks.iter().position(|&x| x == k).expect("k evaluated");
        self.records.iter().map(|r| metric.of(&r.metrics[idx])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Precision,
    Recall,
    Ndcg,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::Ndcg];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "prec",
            Metric::Recall => "rec",
            Metric::Ndcg => "ndcg",
        }
    }

    pub fn of(self, m: &TopKMetrics) -> f64 {
        match self {
            Metric::Precision => m.precision,
            Metric::Recall => m.recall,
            Metric::Ndcg => m.ndcg,
        }
    }
}

/// Mean of `values`, summed in sorted order so the result does not depend on
/// the order of the inputs.
fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn aggregate(records: &[EventRecord], ks: &[usize]) -> Vec<Aggregate> {
    ks.iter()
        .enumerate()
        .map(|(idx, &k)| {
            let col = |metric: Metric| {
                let mut vals: Vec<f64> = records.iter().map(|r| metric.of(&r.metrics[idx])).collect();
                order_free_mean(&mut vals)
            };
            Aggregate {
                k,
                precision: col(Metric::Precision),
                recall: col(Metric::Recall),
                ndcg: col(Metric::Ndcg),
            }
        })
        .collect()
}

/// 1-based rank of `event.item` when `members` are scored, under `policy`.
pub fn rank_true_item<S: GroupScorer + ?Sized>(
    scorer: &S,
    ds: &Dataset,
    event: &InteractionEvent,
    members: &[usize],
    policy: CandidatePolicy,
) -> usize {
    let scores = scorer.score_all(members);
    let target = (event.item, scores[event.item]);
    let adopted = match policy {
        CandidatePolicy::Full => None,
        CandidatePolicy::FullMinusTrain => Some(ds.adoptions(&event.members)),
    };
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| {
            i != event.item && adopted.is_none_or(|a| !a.contains(&i)) && rank_order(&(i, s), &target) == Ordering::Less
        })
        .count();
    ahead + 1
}

/// Evaluates `events`, scoring the members produced by `members_of`.
pub fn evaluate_with<S, F>(
    scorer: &S,
    ds: &Dataset,
    events: &[InteractionEvent],
    opts: &EvalOptions,
    members_of: F,
) -> Result<MetricsReport>
where
    S: GroupScorer + ?Sized,
    F: Fn(&InteractionEvent) -> Vec<usize> + Sync,
{
    if events.is_empty() {
        return Err(Error::Empty("no events to evaluate".into()));
    }
    if opts.ks.is_empty() || opts.ks.contains(&0) {
        return Err(Error::InvalidArgument("K values must be positive and non-empty".into()));
    }
    let one = |ev: &InteractionEvent| {
        let members = members_of(ev);
        let rank = rank_true_item(scorer, ds, ev, &members, opts.policy);
        EventRecord {
            event_id: ev.event_id.clone(),
            size: members.len(),
            rank,
            metrics: metrics_for_rank(rank, &opts.ks),
        }
    };
    let records: Vec<EventRecord> = if opts.threads <= 1 {
        events.iter().map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| events.par_iter().map(one).collect())
    };
    Ok(MetricsReport {
        meta: ReportMeta {
            model: scorer.name().to_owned(),
            candidates: opts.policy.name().to_owned(),
            ..ReportMeta::default()
        },
        ks: opts.ks.clone(),
        aggregates: aggregate(&records, &opts.ks),
        records,
    })
}

/// Ranks every event's true item against its candidates and averages the
/// top-K metrics over events.
pub fn evaluate<S: GroupScorer + ?Sized>(
    scorer: &S,
    ds: &Dataset,
    events: &[InteractionEvent],
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    evaluate_with(scorer, ds, events, opts, |ev| ev.members.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::IdMap;

    struct Oracle;

    impl GroupScorer for Oracle {
        fn name(&self) -> &str {
            "oracle"
        }
        fn score_all(&self, members: &[usize]) -> Vec<f64> {
            // Item index equal to the first member wins.
            (0..10).map(|i| if i == members[0] { 1.0 } else { 0.0 }).collect()
        }
    }

    fn dataset() -> Dataset {
        let mut users = IdMap::new();
        let mut items = IdMap::new();
        for i in 0..10 {
            users.intern(&format!("u{i}"));
            items.intern(&format!("i{i}"));
        }
        let train = vec![InteractionEvent::new("t0", vec![3, 4], 0)];
        let test = (0..10)
            .map(|i| InteractionEvent::new(format!("e{i}"), vec![i, (i + 1) % 10], i))
            .collect();
        Dataset::from_partitions(users, items, train, vec![], test).unwrap()
    }

    #[test]
    fn perfect_scorer() {
        let ds = dataset();
        let r = evaluate(&Oracle, &ds, &ds.test, &EvalOptions::default()).unwrap();
        let a = r.aggregate(5).unwrap();
        assert!((a.precision - 0.2).abs() < 1e-15);
        assert_eq!((a.recall, a.ndcg), (1.0, 1.0));
        assert_eq!(r.records.len(), 10);
    }

    #[test]
    fn train_adoptions_leave_the_candidate_set() {
        struct Fixed;
        impl GroupScorer for Fixed {
            fn name(&self) -> &str {
                "fixed"
            }
            fn score_all(&self, _: &[usize]) -> Vec<f64> {
                (0..10).map(|i| -(i as f64)).collect()
            }
        }
        let ds = dataset();
        let ev = InteractionEvent::new("q", vec![4, 3], 1);
        assert_eq!(
            rank_true_item(&Fixed, &ds, &ev, &ev.members, CandidatePolicy::FullMinusTrain),
            1
        );
        assert_eq!(rank_true_item(&Fixed, &ds, &ev, &ev.members, CandidatePolicy::Full), 2);
        // The true item itself is never excluded.
        let ev = InteractionEvent::new("q", vec![3, 4], 0);
        assert_eq!(
            rank_true_item(&Fixed, &ds, &ev, &ev.members, CandidatePolicy::FullMinusTrain),
            1
        );
    }

    #[test]
    fn empty_event_list_fails() {
        let ds = dataset();
        assert!(evaluate(&Oracle, &ds, &[], &EvalOptions::default()).is_err());
    }

    #[test]
    fn threads_do_not_change_results() {
        let ds = dataset();
        let single = evaluate(&Oracle, &ds, &ds.test, &EvalOptions::default()).unwrap();
        let opts = EvalOptions {
            threads: 3,
            ..EvalOptions::default()
        };
        assert_eq!(evaluate(&Oracle, &ds, &ds.test, &opts).unwrap(), single);
    }
}
