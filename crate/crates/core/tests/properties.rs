mod common;

use std::collections::BTreeSet;

use common::{brute_metrics, random_group, random_params};
use mosan::baselines::{att_avg_group_rep, mf_avg_group_rep};
use mosan::corpus::{sample_negatives, split_dataset, Dataset, EventLog, IdMap, InteractionEvent, SplitRatios};
use mosan::evaluation::{
    evaluate, group_size_breakdown, metrics_for_event, rank_items, EvalOptions, GroupScorer, NeuralScorer, SizeBin,
};
use mosan::mosan::{attention_map, group_rep, score_items};
use mosan::params::Dims;
use mosan::rng::seeded;
use mosan::training::NeuralModel;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

fn dims(users: usize, items: usize, d: usize) -> Dims {
    Dims {
        users,
        items,
        dim: d,
        hidden: d,
    }
}

fn maps(users: usize, items: usize) -> (IdMap, IdMap) {
    let mut u = IdMap::new();
    let mut i = IdMap::new();
    for x in 0..users {
        u.intern(&format!("u{x}"));
    }
    for x in 0..items {
        i.intern(&format!("i{x}"));
    }
    (u, i)
}

/// Random events over `users` x `items`, group sizes 1..=max_n.
fn random_log(seed: u64, users: usize, items: usize, events: usize, max_n: usize) -> EventLog {
    let mut rng = seeded(seed);
    let (u, i) = maps(users, items);
    let events = (0..events)
        .map(|e| {
            let n = rng.gen_range(1..=max_n.min(users));
            InteractionEvent::new(
                format!("e{e}"),
                random_group(&mut rng, users, n),
                rng.gen_range(0..items),
            )
        })
        .collect();
    EventLog {
        users: u,
        items: i,
        events,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn attention_rows_are_distributions(seed in any::<u64>(), n in 2usize..=20, wide in any::<bool>(), std in 0.05f64..2.0) {
        let d = if wide { 50 } else { 4 };
        let p = random_params(dims(25, 3, d), std, seed);
        let group = random_group(&mut seeded(seed), 25, n);
        let map = attention_map(&p, &group);
        for (l, row) in map.alpha.iter().enumerate() {
            prop_assert_eq!(row[l], 0.0);
            prop_assert!(row.iter().all(|&a| (0.0..=1.0).contains(&a)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        prop_assert!((map.beta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_member_groups_sum_their_members(seed in any::<u64>(), std in 0.05f64..3.0) {
        let p = random_params(dims(10, 3, 6), std, seed);
        let g = random_group(&mut seeded(seed), 10, 2);
        let want = &p.user_latent.row(g[0]) + &p.user_latent.row(g[1]);
        prop_assert_eq!(group_rep(&p, &g, None), want);
        prop_assert_eq!(attention_map(&p, &g).beta, vec![0.5, 0.5]);
    }

    #[test]
    fn zeroed_attention_ranks_like_mf_avg(seed in any::<u64>(), n in 2usize..=12) {
        let mut p = random_params(dims(15, 40, 8), 0.5, seed);
        p.zero_attention();
        let g = random_group(&mut seeded(seed), 15, n);
        let rep = group_rep(&p, &g, None);
        let sum = p.user_latent.select(ndarray::Axis(0), &g).sum_axis(ndarray::Axis(0));
        for (a, b) in rep.iter().zip(&sum) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let all: Vec<usize> = (0..40).collect();
        let ids = |v: Vec<(usize, f64)>| v.into_iter().map(|x| x.0).collect::<Vec<_>>();
        let mosan = rank_items(&NeuralScorer::new(NeuralModel::Mosan, &p), &g, &all, 40);
        let mf = rank_items(&NeuralScorer::new(NeuralModel::MfAvg, &p), &g, &all, 40);
        prop_assert_eq!(ids(mosan), ids(mf));
        prop_assert_eq!(att_avg_group_rep(&p, &g, None), mf_avg_group_rep(&p, &g));
    }

    #[test]
    fn split_partitions_the_log(seed in any::<u64>(), events in 1usize..120) {
        let log = random_log(seed, 12, 9, events, 4);
        let all: Vec<InteractionEvent> = log.events.clone();
        let ds = split_dataset(log, SplitRatios::default(), seed).unwrap();
        prop_assert_eq!(ds.valid.len(), (events as f64 * 0.1 + 1e-9).floor() as usize);
        prop_assert_eq!(ds.test.len(), (events as f64 * 0.2 + 1e-9).floor() as usize);
        let mut ids: Vec<&str> = ds.train.iter().chain(&ds.valid).chain(&ds.test).map(|e| e.event_id.as_str()).collect();
        ids.sort_unstable();
        let mut want: Vec<&str> = all.iter().map(|e| e.event_id.as_str()).collect();
        want.sort_unstable();
        prop_assert_eq!(ids, want);
    }

    #[test]
    fn negatives_avoid_group_adoptions(seed in any::<u64>(), count in 1usize..12) {
        let ds = split_dataset(random_log(seed, 6, 10, 80, 2), SplitRatios::default(), seed).unwrap();
        let mut rng = seeded(seed);
        for ev in ds.train.iter().chain(&ds.test) {
            let negs = sample_negatives(&ds, ev, count, &mut rng);
            let adopted = ds.adoptions(&ev.members);
            let pool = (0..10).filter(|i| *i != ev.item && !adopted.contains(i)).count();
            prop_assert_eq!(negs.len(), count.min(pool));
            prop_assert_eq!(negs.iter().collect::<BTreeSet<_>>().len(), negs.len());
            for j in negs {
                prop_assert!(j != ev.item && !adopted.contains(&j) && j < 10);
            }
        }
    }
}

struct Table(Vec<f64>);

impl GroupScorer for Table {
    fn name(&self) -> &str {
        "table"
    }
    fn score_all(&self, _: &[usize]) -> Vec<f64> {
        self.0.clone()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn top_k_matches_a_full_sort(seed in any::<u64>(), n in 1usize..60, k in 0usize..70, coarse in any::<bool>()) {
        let mut rng = seeded(seed);
        // Coarse scores force many ties.
        let scores: Vec<f64> = (0..n).map(|_| if coarse { rng.gen_range(0..4) as f64 } else { rng.gen() }).collect();
        let mut cands: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.8)).collect();
        cands.shuffle(&mut rng);
        let mut oracle: Vec<(usize, f64)> = cands.iter().map(|&c| (c, scores[c])).collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        oracle.truncate(k);
        prop_assert_eq!(rank_items(&Table(scores), &[0], &cands, k), oracle);
    }

    #[test]
    fn metrics_match_brute_force(seed in any::<u64>(), n in 1usize..=50) {
        let mut rng = seeded(seed);
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.shuffle(&mut rng);
        let truth = ranked[rng.gen_range(0..n)];
        let ks = [1, 3, 5, 10, 20, 50];
        let got = metrics_for_event(&ranked, truth, &ks).unwrap();
        for (m, &k) in got.iter().zip(&ks) {
            prop_assert_eq!((m.precision, m.recall, m.ndcg), brute_metrics(&ranked, truth, k));
        }
    }
}

fn eval_fixture(seed: u64) -> (Dataset, mosan::params::ModelParams) {
    let ds = split_dataset(random_log(seed, 30, 25, 150, 12), SplitRatios::default(), seed).unwrap();
    let p = random_params(dims(30, 25, 4), 0.5, seed);
    (ds, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn evaluation_ignores_event_order(seed in any::<u64>()) {
        let (ds, p) = eval_fixture(seed);
        let scorer = NeuralScorer::new(NeuralModel::Mosan, &p);
        let opts = EvalOptions::default();
        let base = evaluate(&scorer, &ds, &ds.test, &opts).unwrap();
        let mut shuffled = ds.test.clone();
        shuffled.shuffle(&mut seeded(seed + 1));
        let again = evaluate(&scorer, &ds, &shuffled, &opts).unwrap();
        prop_assert_eq!(&base.aggregates, &again.aggregates);
        let threaded = evaluate(&scorer, &ds, &ds.test, &EvalOptions { threads: 3, ..opts.clone() }).unwrap();
        prop_assert_eq!(base, threaded);
    }

    #[test]
    fn breakdown_recomposes_the_total(seed in any::<u64>()) {
        let (ds, p) = eval_fixture(seed);
        let scorer = NeuralScorer::new(NeuralModel::Mosan, &p);
        let opts = EvalOptions::default();
        let bins = [SizeBin { min: 1, max: 4 }, SizeBin { min: 5, max: 8 }, SizeBin { min: 9, max: 12 }];
        let parts = group_size_breakdown(&scorer, &ds, &ds.test, &bins, &opts).unwrap();
        let total = evaluate(&scorer, &ds, &ds.test, &opts).unwrap();
        let mut records = Vec::new();
        for (bin, report) in &parts {
            match report {
                Some(r) => {
                    prop_assert!(r.records.iter().all(|e| bin.contains(e.size)));
                    records.extend(r.records.iter().cloned());
                }
                None => prop_assert!(ds.test.iter().all(|e| !bin.contains(e.size()))),
            }
        }
        prop_assert_eq!(records.len(), total.records.len());
        for k in &opts.ks {
            let weighted: f64 = parts
                .iter()
                .filter_map(|(_, r)| r.as_ref())
                .map(|r| r.ndcg(*k) * r.records.len() as f64)
                .sum::<f64>() / total.records.len() as f64;
            prop_assert!((weighted - total.ndcg(*k)).abs() < 1e-12);
        }
        // Scores only depend on the members, so per-event ranks agree.
        for r in &records {
            let same = total.records.iter().find(|t| t.event_id == r.event_id).unwrap();
            prop_assert_eq!(r, same);
        }
    }
}

#[test]
fn scores_are_dot_products_with_the_group_vector() {
    let p = random_params(dims(5, 7, 3), 0.3, 9);
    let g = group_rep(&p, &[0, 2, 4], None);
    let s = score_items(&p, g.as_slice().unwrap());
    for (j, sj) in s.iter().enumerate() {
        assert_eq!(*sj, g.dot(&p.item_latent.row(j)));
    }
}
