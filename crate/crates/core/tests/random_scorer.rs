use mosan::corpus::{Dataset, IdMap, InteractionEvent};
use mosan::evaluation::{evaluate, CandidatePolicy, EvalOptions, GroupScorer, Metric};
use mosan::rng::seeded;
use rand::Rng as _;

/// Independent uniform scores per call, seeded from the member list.
struct Uniform(usize);

impl GroupScorer for Uniform {
    fn name(&self) -> &str {
        "uniform"
    }
    fn score_all(&self, members: &[usize]) -> Vec<f64> {
        let mut rng = seeded(members.iter().fold(17, |h, &m| h * 31 + m as u64));
        (0..self.0).map(|_| rng.gen()).collect()
    }
}

#[test]
fn uniform_scores_hit_at_the_binomial_rate() {
    let (users, items, events) = (4000, 50, 2000);
    let mut u = IdMap::new();
    let mut i = IdMap::new();
    (0..users).for_each(|x| {
        u.intern(&format!("u{x}"));
    });
    (0..items).for_each(|x| {
        i.intern(&format!("i{x}"));
    });
    let mut rng = seeded(3);
    // Disjoint member pairs, so every event gets its own scores.
    let test: Vec<InteractionEvent> = (0..events)
        .map(|e| InteractionEvent::new(format!("e{e}"), vec![2 * e, 2 * e + 1], rng.gen_range(0..items)))
        .collect();
    let ds = Dataset::from_partitions(u, i, vec![], vec![], test).unwrap();
    let opts = EvalOptions {
        policy: CandidatePolicy::Full,
        ..EvalOptions::default()
    };
    let report = evaluate(&Uniform(items), &ds, &ds.test, &opts).unwrap();
    for k in [5, 10, 20] {
        let hits: f64 = report.per_event(Metric::Recall, k).iter().sum();
        let p = k as f64 / items as f64;
        let (mean, sd) = (events as f64 * p, (events as f64 * p * (1.0 - p)).sqrt());
        assert!(
            (hits - mean).abs() < 4.0 * sd,
            "K={k}: {hits} hits, expected {mean} +- {sd}"
        );
    }
}
