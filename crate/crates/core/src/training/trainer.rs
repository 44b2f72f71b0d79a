use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{sample_negatives, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, CandidatePolicy, EvalOptions, NeuralScorer};
use crate::params::{init_params, Dims, HyperParams, ModelParams};
use crate::rng::seeded;
use crate::training::{gradients, score_gap, AdamState, NeuralModel, Penalty, TrainingInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the per-batch mean losses.
    pub loss: f64,
    /// Validation ndcg@5, NaN without a validation partition.
    pub val_ndcg5: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch (the last epoch when there is
    /// no validation data).
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Fraction of instances whose positive item outscores the negative one.
pub fn pairwise_auc(model: NeuralModel, p: &ModelParams, instances: &[TrainingInstance]) -> f64 {
    let wins = instances
        .iter()
        .filter(|inst| score_gap(model, p, inst, None) > 0.0)
        .count();
    wins as f64 / instances.len() as f64
}

/// Mini-batch BPR training with Adam and early stopping on validation
/// ndcg@5. Every random draw (initialisation, shuffling, negatives, dropout)
/// comes from one generator seeded with `hp.seed`.
pub fn train(ds: &Dataset, model: NeuralModel, hp: &HyperParams, policy: CandidatePolicy) -> Result<TrainOutcome> {
    hp.validate()?;
    if ds.train.is_empty() {
        return Err(Error::Empty("training partition".into()));
    }
    let mut rng = seeded(hp.seed);
    let dims = Dims {
        users: ds.num_users(),
        items: ds.num_items(),
        dim: hp.dim,
        hidden: hp.hidden,
    };
    let mut params = init_params(dims, hp.init_std, rng.gen())?;
    let mut adam = AdamState::new(&params);
    let val_opts = EvalOptions {
        policy,
        ks: vec![5],
        threads: 1,
    };

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    for epoch in 0..hp.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut instances = Vec::with_capacity(order.len() * hp.negatives);
        for &idx in &order {
            let ev = &ds.train[idx];
            for neg in sample_negatives(ds, ev, hp.negatives, &mut rng) {
                instances.push(TrainingInstance::new(ev.members.clone(), ev.item, neg));
            }
        }
        if instances.is_empty() {
            return Err(Error::Empty(
                "no negatives could be sampled for any training event".into(),
            ));
        }
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for batch in instances.chunks(hp.batch_size) {
            let (loss, grads) = gradients(
                model,
                &params,
                batch,
                Penalty::for_batch(hp.l2, batch.len(), instances.len()),
                hp.dropout,
                &mut rng,
            )
            .map_err(|e| Error::NonFinite(format!("epoch {epoch} batch {batches}: {e}")))?;
            adam.step(&mut params, &grads, hp)?;
            loss_sum += loss;
            batches += 1;
        }

        let val_ndcg5 = if ds.valid.is_empty() {
            f64::NAN
        } else {
            evaluate(&NeuralScorer::new(model, &params), ds, &ds.valid, &val_opts)?.ndcg(5)
        };
        history.push(EpochRecord {
            epoch,
            loss: loss_sum / batches as f64,
            val_ndcg5,
            seconds: start.elapsed().as_secs_f64(),
        });

        if val_ndcg5.is_nan() {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _, _)| val_ndcg5 > *b) {
            best = Some((val_ndcg5, epoch, params.clone()));
        } else if hp.patience > 0 && epoch - best.as_ref().unwrap().1 >= hp.patience {
            break;
        }
    }
    Ok(match best {
        Some((_, best_epoch, params)) => TrainOutcome {
            params,
            history,
            best_epoch,
        },
        None => TrainOutcome {
            best_epoch: history.len().saturating_sub(1),
            params,
            history,
        },
    })
}
