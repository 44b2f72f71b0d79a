//! Trains MoSAN and MF-AVG on the planted-influencer corpus and prints ndcg@5
//! for both, how often the deciding member gets the largest impact weight,
//! and ndcg@5 after removing each group's top 0, 1 and 3 members.
//!
//! Usage: `cargo run --release --example planted_study [epochs] [seed]`

use std::time::Instant;

use mosan::corpus::planted::{generate, PlantedConfig};
use mosan::corpus::{split_dataset, SplitRatios};
use mosan::evaluation::{ablation_remove_top_users, evaluate, EvalOptions, GroupScorer, NeuralScorer, RemovalPolicy};
use mosan::params::HyperParams;
use mosan::training::{train, NeuralModel};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(100), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;
    let data = generate(&PlantedConfig::default())?;
    let ds = split_dataset(data.log.clone(), SplitRatios::default(), seed)?;
    let hp = HyperParams {
        epochs,
        seed,
        ..HyperParams::default()
    };
    let opts = EvalOptions::default();
    let mut ndcg = Vec::new();
    for model in [NeuralModel::Mosan, NeuralModel::MfAvg] {
        let start = Instant::now();
        let out = train(&ds, model, &hp, opts.policy)?;
        let scorer = NeuralScorer::new(model, &out.params);
        let report = evaluate(&scorer, &ds, &ds.test, &opts)?;
        println!(
            "{}: ndcg@5 {:.4}, best epoch {}, {:.1}s",
            model.name(),
            report.ndcg(5),
            out.best_epoch,
            start.elapsed().as_secs_f64()
        );
        ndcg.push(report.ndcg(5));
        if model == NeuralModel::Mosan {
            let hits = ds
                .test
                .iter()
                .filter(|ev| {
                    let beta = scorer.impact(&ev.members);
                    let top = (0..beta.len()).max_by(|&a, &b| beta[a].total_cmp(&beta[b])).unwrap();
                    ev.members[top] == data.dominant(ev)
                })
                .count();
            println!(
                "decider has the top beta in {:.3} of test groups",
                hits as f64 / ds.test.len() as f64
            );
            for k in [0, 1, 3] {
                let r = ablation_remove_top_users(&scorer, &ds, &ds.test, k, RemovalPolicy::PerGroup, &opts)?;
                println!("remove top {k}: ndcg@5 {:.4}", r.ndcg(5));
            }
        }
    }
    println!("relative ndcg@5 gain over MF-AVG: {:.3}", ndcg[0] / ndcg[1] - 1.0);
    Ok(())
}
