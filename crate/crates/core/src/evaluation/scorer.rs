use crate::baselines::neural::att_avg_forward;
use crate::baselines::{Aggregation, CfModel};
use crate::mosan::{attention_map, score_items};
use crate::params::ModelParams;
use crate::ranking::top_k;
use crate::training::NeuralModel;

/// Anything that scores every item for a group. Scorers are evaluation-mode
/// only (no dropout) and pure, so evaluation may fan out across threads.
pub trait GroupScorer: Sync {
    fn name(&self) -> &str;

    /// Scores of items `0..N`, indexed by item.
    fn score_all(&self, members: &[usize]) -> Vec<f64>;

    /// Per-member impact weights in the caller's member order, summing to 1.
    /// Models without a notion of impact report uniform weights.
    fn impact(&self, members: &[usize]) -> Vec<f64> {
        vec![1.0 / members.len() as f64; members.len()]
    }
}

/// Top-`k` candidates of any scorer with the shared tie-break.
pub fn rank_items<S: GroupScorer + ?Sized>(
    scorer: &S,
    members: &[usize],
    candidates: &[usize],
    k: usize,
) -> Vec<(usize, f64)> {
    let scores = scorer.score_all(members);
    top_k(candidates.iter().map(|&c| (c, scores[c])).collect(), k)
}

pub struct NeuralScorer<'a> {
    pub model: NeuralModel,
    pub params: &'a ModelParams,
}

impl<'a> NeuralScorer<'a> {
    pub fn new(model: NeuralModel, params: &'a ModelParams) -> Self {
        Self { model, params }
    }
}

impl GroupScorer for NeuralScorer<'_> {
    fn name(&self) -> &str {
        self.model.name()
    }

    fn score_all(&self, members: &[usize]) -> Vec<f64> {
        let enc = self.model.encode(self.params, members, None);
        score_items(self.params, enc.group())
    }

    fn impact(&self, members: &[usize]) -> Vec<f64> {
        match self.model {
            NeuralModel::Mosan => attention_map(self.params, members).beta,
            NeuralModel::AttAvg => {
                let fwd = att_avg_forward(self.params, members, None);
                members
                    .iter()
                    .map(|u| fwd.weights[fwd.members.binary_search(u).expect("member")])
                    .collect()
            }
            NeuralModel::MfAvg => vec![1.0 / members.len() as f64; members.len()],
        }
    }
}

pub struct CfScorer<'a> {
    pub model: &'a CfModel,
    pub strategy: Aggregation,
}

impl GroupScorer for CfScorer<'_> {
    fn name(&self) -> &str {
        match self.strategy {
            Aggregation::Average => "cf-avg",
            Aggregation::LeastMisery => "cf-lm",
            Aggregation::RelevanceDisagreement { .. } => "cf-rd",
        }
    }

    fn score_all(&self, members: &[usize]) -> Vec<f64> {
        self.model.group_scores(members, self.strategy)
    }
}
