//! BPR objective, analytic gradients, Adam and the mini-batch trainer.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use crate::baselines::neural::{
    att_avg_backward, att_avg_forward, mf_avg_backward, mf_avg_forward, AttAvgForward, MeanForward,
};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, row};
use crate::mosan::{self, DropoutMask, MosanForward};
use crate::params::{Dims, ModelParams};
use crate::rng::Rng;

mod adam;
mod trainer;

pub use adam::AdamState;
pub use trainer::{pairwise_auc, train, EpochRecord, TrainOutcome};

/// The embedding models trained with the BPR pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuralModel {
    Mosan,
    MfAvg,
    AttAvg,
}

impl NeuralModel {
    pub fn name(self) -> &'static str {
        match self {
            NeuralModel::Mosan => "mosan",
            NeuralModel::MfAvg => "mf-avg",
            NeuralModel::AttAvg => "att-avg",
        }
    }

    /// Number of hidden-activation mask slots for a group of `n`.
    pub fn mask_slots(self, n: usize) -> usize {
        match self {
            NeuralModel::Mosan if n >= 2 => n * n,
            NeuralModel::AttAvg => n,
            _ => 0,
        }
    }

    pub fn encode(self, p: &ModelParams, members: &[usize], mask: Option<&DropoutMask>) -> Encoded {
        match self {
            NeuralModel::Mosan => Encoded::Mosan(mosan::forward(p, members, mask)),
            NeuralModel::MfAvg => Encoded::Mean(mf_avg_forward(p, members)),
            NeuralModel::AttAvg => Encoded::Att(att_avg_forward(p, members, mask)),
        }
    }

    fn uses_context(self) -> bool {
        self == NeuralModel::Mosan
    }

    fn uses_attention(self) -> bool {
        self != NeuralModel::MfAvg
    }

    /// Squared norm of the regularised attention tensors (the output bias is
    /// excluded: it cancels in every softmax).
    fn attention_sq_norm(self, p: &ModelParams) -> f64 {
        let sq = |xs: &[f64]| dot(xs, xs);
        let mut total = 0.0;
        if self.uses_context() {
            total += sq(p.w_context.as_slice().unwrap());
        }
        if self.uses_attention() {
            total += sq(p.w_user.as_slice().unwrap())
                + sq(p.hidden_bias.as_slice().unwrap())
                + sq(p.w_out.as_slice().unwrap());
        }
        total
    }
}

impl std::str::FromStr for NeuralModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mosan" => Ok(NeuralModel::Mosan),
            "mf-avg" => Ok(NeuralModel::MfAvg),
            "att-avg" => Ok(NeuralModel::AttAvg),
            other => Err(Error::InvalidArgument(format!("unknown neural model {other:?}"))),
        }
    }
}

/// Cached forward pass of any neural model.
#[derive(Debug, Clone)]
pub enum Encoded {
    Mosan(MosanForward),
    Mean(MeanForward),
    Att(AttAvgForward),
}

impl Encoded {
    pub fn group(&self) -> &[f64] {
        match self {
            Encoded::Mosan(f) => &f.group,
            Encoded::Mean(f) => &f.group,
            Encoded::Att(f) => &f.group,
        }
    }

    fn backprop(
        &self,
        p: &ModelParams,
        mask: Option<&DropoutMask>,
        d_group: &[f64],
        scale: f64,
        grads: &mut GradientSet,
    ) {
        match self {
            Encoded::Mosan(f) => mosan::backward(p, f, mask, d_group, scale, grads),
            Encoded::Mean(f) => mf_avg_backward(p, f, d_group, scale, grads),
            Encoded::Att(f) => att_avg_backward(p, f, mask, d_group, scale, grads),
        }
    }
}

/// One `(group, positive, negative)` triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance {
    pub group: Vec<usize>,
    pub positive: usize,
    pub negative: usize,
}

impl TrainingInstance {
    pub fn new(group: Vec<usize>, positive: usize, negative: usize) -> Self {
        assert_ne!(positive, negative, "positive and negative items must differ");
        Self {
            group,
            positive,
            negative,
        }
    }
}

/// Gradients of a batch loss: sparse rows for the embeddings, dense tensors
/// for the attention network.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub user_latent: BTreeMap<usize, Vec<f64>>,
    pub user_context: BTreeMap<usize, Vec<f64>>,
    pub item_latent: BTreeMap<usize, Vec<f64>>,
    pub w_context: Array2<f64>,
    pub w_user: Array2<f64>,
    pub hidden_bias: Array1<f64>,
    pub w_out: Array1<f64>,
    pub out_bias: f64,
}

impl GradientSet {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            user_latent: BTreeMap::new(),
            user_context: BTreeMap::new(),
            item_latent: BTreeMap::new(),
            w_context: Array2::zeros((dims.hidden, dims.dim)),
            w_user: Array2::zeros((dims.hidden, dims.dim)),
            hidden_bias: Array1::zeros(dims.hidden),
            w_out: Array1::zeros(dims.hidden),
            out_bias: 0.0,
        }
    }

    pub fn user_latent_row(&mut self, u: usize, dim: usize) -> &mut [f64] {
        self.user_latent.entry(u).or_insert_with(|| vec![0.0; dim])
    }

    pub fn user_context_row(&mut self, u: usize, dim: usize) -> &mut [f64] {
        self.user_context.entry(u).or_insert_with(|| vec![0.0; dim])
    }

    pub fn item_latent_row(&mut self, i: usize, dim: usize) -> &mut [f64] {
        self.item_latent.entry(i).or_insert_with(|| vec![0.0; dim])
    }

    pub fn all_finite(&self) -> bool {
        let rows = self
            .user_latent
            .values()
            .chain(self.user_context.values())
            .chain(self.item_latent.values())
            .flatten();
        rows.chain(self.w_context.iter())
            .chain(self.w_user.iter())
            .chain(self.hidden_bias.iter())
            .chain(self.w_out.iter())
            .all(|x| x.is_finite())
            && self.out_bias.is_finite()
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function, stable for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn row_sq(a: &Array2<f64>, i: usize) -> f64 {
    let r = row(a, i);
    dot(r, r)
}

/// Squared norm of the embedding rows an instance touches.
fn embedding_sq_norm(model: NeuralModel, p: &ModelParams, inst: &TrainingInstance) -> f64 {
    let mut total = row_sq(&p.item_latent, inst.positive) + row_sq(&p.item_latent, inst.negative);
    for &u in &inst.group {
        total += row_sq(&p.user_latent, u);
        if model.uses_context() {
            total += row_sq(&p.user_context, u);
        }
    }
    total
}

/// Score gap `R(i, j) - R(i, k)` for an instance.
pub fn score_gap(model: NeuralModel, p: &ModelParams, inst: &TrainingInstance, mask: Option<&DropoutMask>) -> f64 {
    let enc = model.encode(p, &inst.group, mask);
    gap_of(p, enc.group(), inst)
}

fn gap_of(p: &ModelParams, g: &[f64], inst: &TrainingInstance) -> f64 {
    dot(g, row(&p.item_latent, inst.positive)) - dot(g, row(&p.item_latent, inst.negative))
}

/// `-ln sigmoid(gap) + l2 * ||touched parameters||^2` for one instance.
pub fn bpr_loss(
    model: NeuralModel,
    p: &ModelParams,
    inst: &TrainingInstance,
    l2: f64,
    mask: Option<&DropoutMask>,
) -> f64 {
    let gap = score_gap(model, p, inst, mask);
    let mut loss = softplus(-gap);
    if l2 != 0.0 {
        loss += l2 * (embedding_sq_norm(model, p, inst) + model.attention_sq_norm(p));
    }
    loss
}

/// The mean batch objective that [`gradients_with_masks`] differentiates.
pub fn batch_loss(
    model: NeuralModel,
    p: &ModelParams,
    batch: &[TrainingInstance],
    penalty: Penalty,
    masks: &[Option<DropoutMask>],
) -> f64 {
    let mean = batch
        .iter()
        .zip(masks)
        .map(|(inst, mask)| {
            softplus(-score_gap(model, p, inst, mask.as_ref())) + penalty.l2 * embedding_sq_norm(model, p, inst)
        })
        .sum::<f64>()
        / batch.len() as f64;
    mean + penalty.l2 * penalty.dense_share * model.attention_sq_norm(p)
}

/// L2 weight and the share of the attention-net penalty a batch carries.
///
/// Embedding rows are penalised per instance that touches them. The
/// attention-net tensors are shared by every instance, so their penalty
/// enters once per pass over the data, split across batches in proportion
/// to batch size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub l2: f64,
    pub dense_share: f64,
}

impl Penalty {
    /// The whole attention-net penalty in one batch.
    pub fn full(l2: f64) -> Self {
        Self { l2, dense_share: 1.0 }
    }

    /// The share of a `batch`-instance batch in an epoch of `epoch` instances.
    pub fn for_batch(l2: f64, batch: usize, epoch: usize) -> Self {
        Self {
            l2,
            dense_share: batch as f64 / epoch as f64,
        }
    }
}

/// Gradient of the mean batch loss at the given masks (one per instance).
/// Returns the mean loss alongside.
pub fn gradients_with_masks(
    model: NeuralModel,
    p: &ModelParams,
    batch: &[TrainingInstance],
    penalty: Penalty,
    masks: &[Option<DropoutMask>],
) -> Result<(f64, GradientSet)> {
    let l2 = penalty.l2;
    if batch.is_empty() {
        return Err(Error::Empty("gradient batch".into()));
    }
    assert_eq!(batch.len(), masks.len(), "one mask per instance");
    let dims = p.dims();
    let dim = dims.dim;
    let scale = 1.0 / batch.len() as f64;
    let mut grads = GradientSet::zeros(dims);
    let mut loss = 0.0;
    for (idx, (inst, mask)) in batch.iter().zip(masks).enumerate() {
        let mask = mask.as_ref();
        let enc = model.encode(p, &inst.group, mask);
        let g = enc.group();
        let gap = gap_of(p, g, inst);
        if !gap.is_finite() {
            return Err(non_finite(p, idx, inst, "score gap"));
        }
        loss += softplus(-gap);
        // dL/dgap = -sigmoid(-gap)
        let coef = -sigmoid(-gap);
        let vj = row(&p.item_latent, inst.positive);
        let vk = row(&p.item_latent, inst.negative);
        let d_group: Vec<f64> = vj.iter().zip(vk).map(|(a, b)| coef * (a - b)).collect();
        axpy(scale * coef, g, grads.item_latent_row(inst.positive, dim));
        axpy(-scale * coef, g, grads.item_latent_row(inst.negative, dim));
        enc.backprop(p, mask, &d_group, scale, &mut grads);

        if l2 != 0.0 {
            loss += l2 * embedding_sq_norm(model, p, inst);
            let k = 2.0 * l2 * scale;
            axpy(k, vj, grads.item_latent_row(inst.positive, dim));
            axpy(k, vk, grads.item_latent_row(inst.negative, dim));
            for &u in &inst.group {
                axpy(k, row(&p.user_latent, u), grads.user_latent_row(u, dim));
                if model.uses_context() {
                    axpy(k, row(&p.user_context, u), grads.user_context_row(u, dim));
                }
            }
        }
    }
    loss *= scale;
    if l2 != 0.0 {
        let l2 = l2 * penalty.dense_share;
        loss += l2 * model.attention_sq_norm(p);
        let k = 2.0 * l2;
        if model.uses_context() {
            grads.w_context.scaled_add(k, &p.w_context);
        }
        if model.uses_attention() {
            grads.w_user.scaled_add(k, &p.w_user);
            grads.hidden_bias.scaled_add(k, &p.hidden_bias);
            grads.w_out.scaled_add(k, &p.w_out);
        }
    }
    if !grads.all_finite() || !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "batch gradient is not finite (loss {loss}); {}",
            param_norms(p)
        )));
    }
    Ok((loss, grads))
}

/// Samples a fresh dropout mask per instance (none when `dropout == 0`) and
/// returns the gradient of the mean batch loss.
pub fn gradients(
    model: NeuralModel,
    p: &ModelParams,
    batch: &[TrainingInstance],
    penalty: Penalty,
    dropout: f64,
    rng: &mut Rng,
) -> Result<(f64, GradientSet)> {
    let hidden = p.dims().hidden;
    let masks: Vec<Option<DropoutMask>> = batch
        .iter()
        .map(|inst| {
            let slots = model.mask_slots(inst.group.len());
            (dropout > 0.0 && slots > 0).then(|| DropoutMask::sample(slots, hidden, dropout, rng))
        })
        .collect();
    gradients_with_masks(model, p, batch, penalty, &masks)
}

fn param_norms(p: &ModelParams) -> String {
    let n = |xs: &[f64]| dot(xs, xs).sqrt();
    format!(
        "norms U={:.3e} C={:.3e} V={:.3e} W_c={:.3e} W_u={:.3e} b={:.3e} w={:.3e} d={:.3e}",
        n(p.user_latent.as_slice().unwrap()),
        n(p.user_context.as_slice().unwrap()),
        n(p.item_latent.as_slice().unwrap()),
        n(p.w_context.as_slice().unwrap()),
        n(p.w_user.as_slice().unwrap()),
        n(p.hidden_bias.as_slice().unwrap()),
        n(p.w_out.as_slice().unwrap()),
        p.out_bias.abs(),
    )
}

fn non_finite(p: &ModelParams, idx: usize, inst: &TrainingInstance, what: &str) -> Error {
    Error::NonFinite(format!(
        "{what} at batch instance {idx} (group {:?}, items {}/{}); {}",
        inst.group,
        inst.positive,
        inst.negative,
        param_norms(p)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::init_params;
    use crate::rng::seeded;

    fn dims() -> Dims {
        Dims {
            users: 6,
            items: 5,
            dim: 4,
            hidden: 4,
        }
    }

    #[test]
    fn equal_scores_cost_ln2() {
        let mut p = init_params(dims(), 0.1, 1).unwrap();
        let v = p.item_latent.row(0).to_owned();
        p.item_latent.row_mut(1).assign(&v);
        let inst = TrainingInstance::new(vec![0, 1, 2], 0, 1);
        for model in [NeuralModel::Mosan, NeuralModel::MfAvg, NeuralModel::AttAvg] {
            let loss = bpr_loss(model, &p, &inst, 0.0, None);
            assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        }
        let zero = ModelParams::zeros(dims());
        let loss = bpr_loss(NeuralModel::Mosan, &zero, &inst, 0.01, None);
        assert_eq!(loss, std::f64::consts::LN_2);
    }

    #[test]
    fn large_gap_is_stable() {
        let loss = softplus(-20.0);
        assert!((loss - 2.061153620314381e-9).abs() < 1e-20);
        assert!(softplus(-1e4).is_finite() && softplus(1e4).is_finite());
        assert_eq!(sigmoid(-1e4), 0.0);
    }

    #[test]
    fn loss_decreases_with_gap() {
        let mut last = f64::INFINITY;
        for gap in [-30.0, -3.0, -0.5, 0.0, 0.1, 2.0, 40.0] {
            let l = softplus(-gap);
            assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn two_member_item_gradient_closed_form() {
        let mut p = init_params(dims(), 0.3, 2).unwrap();
        p.zero_attention();
        let l2 = 0.01;
        let inst = TrainingInstance::new(vec![1, 4], 2, 3);
        let (_, g) = gradients_with_masks(
            NeuralModel::Mosan,
            &p,
            std::slice::from_ref(&inst),
            Penalty::full(l2),
            &[None],
        )
        .unwrap();
        let group = &p.user_latent.row(1) + &p.user_latent.row(4);
        let gap = group.dot(&p.item_latent.row(2)) - group.dot(&p.item_latent.row(3));
        let s = sigmoid(-gap);
        let want = &group * (-s) + &(&p.item_latent.row(2) * (2.0 * l2));
        let got = &g.item_latent[&2];
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn all_ones_mask_matches_no_dropout_path() {
        let p = init_params(dims(), 0.3, 3).unwrap();
        let batch = vec![
            TrainingInstance::new(vec![0, 2, 5], 1, 4),
            TrainingInstance::new(vec![3, 1], 0, 2),
        ];
        for model in [NeuralModel::Mosan, NeuralModel::AttAvg] {
            let masks: Vec<_> = batch
                .iter()
                .map(|i| {
                    let slots = model.mask_slots(i.group.len());
                    Some(DropoutMask::from_keep(4, &vec![true; slots * 4], 0.0))
                })
                .collect();
            let plain = gradients_with_masks(model, &p, &batch, Penalty::full(0.01), &[None, None]).unwrap();
            let masked = gradients_with_masks(model, &p, &batch, Penalty::full(0.01), &masks).unwrap();
            assert_eq!(plain, masked);
            let mut rng = seeded(0);
            let zero_rate = gradients(model, &p, &batch, Penalty::full(0.01), 0.0, &mut rng).unwrap();
            assert_eq!(plain, zero_rate);
        }
    }

    #[test]
    fn sparse_rows_only_for_touched_entities() {
        let p = init_params(dims(), 0.3, 4).unwrap();
        let batch = vec![TrainingInstance::new(vec![0, 2], 1, 4)];
        let (_, g) = gradients_with_masks(NeuralModel::Mosan, &p, &batch, Penalty::full(0.01), &[None]).unwrap();
        assert_eq!(g.user_latent.keys().copied().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(g.user_context.keys().copied().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(g.item_latent.keys().copied().collect::<Vec<_>>(), vec![1, 4]);
        let (_, g) = gradients_with_masks(NeuralModel::MfAvg, &p, &batch, Penalty::full(0.01), &[None]).unwrap();
        assert!(g.user_context.is_empty());
        assert!(g.w_user.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_finite_parameters_abort() {
        let mut p = init_params(dims(), 0.3, 5).unwrap();
        p.item_latent[[1, 0]] = f64::NAN;
        let batch = vec![TrainingInstance::new(vec![0, 2], 1, 4)];
        let err = gradients_with_masks(NeuralModel::Mosan, &p, &batch, Penalty::full(0.0), &[None]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert!(err.to_string().contains("instance 0"));
    }
}
