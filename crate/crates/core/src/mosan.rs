//! Medley of sub-attention networks.
//!
//! For a group of `n` members, member `l` owns a sub-network that scores every
//! other member `m` with
//!
//! ```text
//! a(l, m) = w . (W_c c_l + W_u u_m + b) + d
//! ```
//!
//! normalises the scores with a softmax over `m != l`, and returns the convex
//! combination `g_l = sum_m alpha(l, m) u_m`. The group representation is the
//! plain sum `g = sum_l g_l` and an item is scored with `g . v_j`.
//!
//! Members are processed in ascending index order, so the group
//! representation is bit-identical for every permutation of the member list.

use ndarray::Array1;
use rand::Rng as _;

use crate::linalg::{axpy, dot, matvec, matvec_t_add, outer_add, row, softmax};
use crate::params::ModelParams;
use crate::ranking::top_k;
use crate::rng::Rng;
use crate::training::GradientSet;

/// Per-unit multipliers for hidden attention activations (inverted dropout).
///
/// Slot `k` holds `width` factors, each `0` (dropped) or `1 / (1 - rate)`.
/// For MoSAN the slot of pair `(l, m)` is `l * n + m`, with positions taken in
/// ascending member order.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    width: usize,
    factors: Vec<f64>,
}

impl DropoutMask {
    pub fn sample(slots: usize, width: usize, rate: f64, rng: &mut Rng) -> Self {
        let scale = 1.0 / (1.0 - rate);
        let factors = (0..slots * width)
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
            .collect();
        Self { width, factors }
    }

    /// Builds a mask from explicit keep flags.
    pub fn from_keep(width: usize, keep: &[bool], rate: f64) -> Self {
        assert_eq!(keep.len() % width, 0, "keep flags must fill whole slots");
        let scale = 1.0 / (1.0 - rate);
        Self {
            width,
            factors: keep.iter().map(|&k| if k { scale } else { 0.0 }).collect(),
        }
    }

    pub fn slot(&self, k: usize) -> &[f64] {
        &self.factors[k * self.width..(k + 1) * self.width]
    }

    pub fn slots(&self) -> usize {
        self.factors.len() / self.width
    }
}

fn hidden(p: &ModelParams, ctx_proj: &[f64], user_proj: &[f64]) -> Vec<f64> {
    ctx_proj
        .iter()
        .zip(user_proj)
        .zip(p.hidden_bias.iter())
        .map(|((c, u), b)| c + u + b)
        .collect()
}

fn score_hidden(p: &ModelParams, h: &[f64], mask: Option<&[f64]>) -> f64 {
    let w = p.w_out.as_slice().expect("contiguous");
    let projected = match mask {
        None => dot(w, h),
        Some(k) => h.iter().zip(k).zip(w).map(|((h, k), w)| w * (h * k)).sum(),
    };
    projected + p.out_bias
}

/// Attention score of `owner`'s sub-network for `member`. `mask` scales the
/// hidden activation elementwise before the output projection.
///
/// # Panics
/// When `owner == member`.
pub fn attention_score(p: &ModelParams, owner: usize, member: usize, mask: Option<&[f64]>) -> f64 {
    assert_ne!(owner, member, "a sub-network never scores its own owner");
    let cp = matvec(&p.w_context, row(&p.user_context, owner));
    let up = matvec(&p.w_user, row(&p.user_latent, member));
    score_hidden(p, &hidden(p, &cp, &up), mask)
}

/// Softmax weights of sub-network `l` (a position in `group`) over the other
/// members, in group order with position `l` skipped. Mask slots follow the
/// given order.
pub fn sub_attention_weights(p: &ModelParams, group: &[usize], l: usize, mask: Option<&DropoutMask>) -> Vec<f64> {
    assert!(group.len() >= 2, "sub-attention needs at least two members");
    let n = group.len();
    let cp = matvec(&p.w_context, row(&p.user_context, group[l]));
    let scores: Vec<f64> = (0..n)
        .filter(|&m| m != l)
        .map(|m| {
            let up = matvec(&p.w_user, row(&p.user_latent, group[m]));
            score_hidden(p, &hidden(p, &cp, &up), mask.map(|k| k.slot(l * n + m)))
        })
        .collect();
    softmax(&scores)
}

/// `g_l`: the attention-weighted sum of the other members' latent vectors.
pub fn sub_group_rep(p: &ModelParams, group: &[usize], l: usize, mask: Option<&DropoutMask>) -> Array1<f64> {
    let weights = sub_attention_weights(p, group, l, mask);
    let mut g = vec![0.0; p.user_latent.ncols()];
    let others = (0..group.len()).filter(|&m| m != l);
    for (m, a) in others.zip(weights) {
        axpy(a, row(&p.user_latent, group[m]), &mut g);
    }
    Array1::from(g)
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct MosanForward {
    /// Members in ascending index order.
    pub members: Vec<usize>,
    /// `n x n` row-major, `alpha[l * n + m]`, zero on the diagonal.
    pub alpha: Vec<f64>,
    pub group: Vec<f64>,
    ctx_proj: Vec<Vec<f64>>,
    user_proj: Vec<Vec<f64>>,
}

impl MosanForward {
    pub fn n(&self) -> usize {
        self.members.len()
    }

    /// Incoming attention per member position, averaged over the `n`
    /// sub-networks. Sums to 1.
    pub fn impact(&self) -> Vec<f64> {
        let n = self.n();
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|m| (0..n).filter(|&l| l != m).map(|l| self.alpha[l * n + m]).sum::<f64>() / n as f64)
            .collect()
    }
}

/// Full forward pass. A lone member is represented by its own latent vector.
///
/// # Panics
/// On an empty group.
pub fn forward(p: &ModelParams, members: &[usize], mask: Option<&DropoutMask>) -> MosanForward {
    assert!(!members.is_empty(), "empty group");
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    forward_ordered(p, sorted, mask)
}

fn forward_ordered(p: &ModelParams, members: Vec<usize>, mask: Option<&DropoutMask>) -> MosanForward {
    let n = members.len();
    if n == 1 {
        return MosanForward {
            group: row(&p.user_latent, members[0]).to_vec(),
            members,
            alpha: vec![0.0],
            ctx_proj: Vec::new(),
            user_proj: Vec::new(),
        };
    }
    let ctx_proj: Vec<Vec<f64>> = members
        .iter()
        .map(|&u| matvec(&p.w_context, row(&p.user_context, u)))
        .collect();
    let user_proj: Vec<Vec<f64>> = members
        .iter()
        .map(|&u| matvec(&p.w_user, row(&p.user_latent, u)))
        .collect();
    let mut alpha = vec![0.0; n * n];
    let mut group = vec![0.0; p.user_latent.ncols()];
    let mut scores = Vec::with_capacity(n - 1);
    for l in 0..n {
        scores.clear();
        for m in (0..n).filter(|&m| m != l) {
            let h = hidden(p, &ctx_proj[l], &user_proj[m]);
            scores.push(score_hidden(p, &h, mask.map(|k| k.slot(l * n + m))));
        }
        let weights = softmax(&scores);
        for (m, a) in (0..n).filter(|&m| m != l).zip(weights) {
            alpha[l * n + m] = a;
            axpy(a, row(&p.user_latent, members[m]), &mut group);
        }
    }
    MosanForward {
        members,
        alpha,
        group,
        ctx_proj,
        user_proj,
    }
}

/// Accumulates `scale * dL/dθ` given `d_group = dL/dg` into `grads`.
pub fn backward(
    p: &ModelParams,
    fwd: &MosanForward,
    mask: Option<&DropoutMask>,
    d_group: &[f64],
    scale: f64,
    grads: &mut GradientSet,
) {
    let n = fwd.n();
    let dim = p.user_latent.ncols();
    if n == 1 {
        axpy(scale, d_group, grads.user_latent_row(fwd.members[0], dim));
        return;
    }
    let hdim = p.w_out.len();
    let w = p.w_out.as_slice().expect("contiguous");
    // dL/d alpha(l, m) = d_group . u_m, independent of l.
    let pull: Vec<f64> = fwd
        .members
        .iter()
        .map(|&u| dot(d_group, row(&p.user_latent, u)))
        .collect();
    let mut ctx_delta = vec![vec![0.0; hdim]; n];
    let mut user_delta = vec![vec![0.0; hdim]; n];
    let mut incoming = vec![0.0; n];
    for (l, ctx_l) in ctx_delta.iter_mut().enumerate() {
        let a = &fwd.alpha[l * n..(l + 1) * n];
        let mean_pull: f64 = (0..n).filter(|&m| m != l).map(|m| a[m] * pull[m]).sum();
        for m in (0..n).filter(|&m| m != l) {
            incoming[m] += a[m];
            let da = scale * a[m] * (pull[m] - mean_pull);
            grads.out_bias += da;
            let h = hidden(p, &fwd.ctx_proj[l], &fwd.user_proj[m]);
            let k = mask.map(|k| k.slot(l * n + m));
            for j in 0..hdim {
                let kj = k.map_or(1.0, |k| k[j]);
                grads.w_out[j] += da * h[j] * kj;
                let delta = da * w[j] * kj;
                ctx_l[j] += delta;
                user_delta[m][j] += delta;
                grads.hidden_bias[j] += delta;
            }
        }
    }
    for (pos, &u) in fwd.members.iter().enumerate() {
        let c_row = row(&p.user_context, u);
        let u_row = row(&p.user_latent, u);
        outer_add(&mut grads.w_context, &ctx_delta[pos], c_row);
        outer_add(&mut grads.w_user, &user_delta[pos], u_row);
        let gc = grads.user_context_row(u, dim);
        matvec_t_add(&p.w_context, &ctx_delta[pos], gc);
        let gu = grads.user_latent_row(u, dim);
        axpy(scale * incoming[pos], d_group, gu);
        matvec_t_add(&p.w_user, &user_delta[pos], gu);
    }
}

/// `g_i`, the sum of all sub-group representations.
pub fn group_rep(p: &ModelParams, group: &[usize], mask: Option<&DropoutMask>) -> Array1<f64> {
    Array1::from(forward(p, group, mask).group)
}

pub fn predict_score(p: &ModelParams, group: &[usize], item: usize, mask: Option<&DropoutMask>) -> f64 {
    dot(&forward(p, group, mask).group, row(&p.item_latent, item))
}

/// Scores of every item for a group representation.
pub fn score_items(p: &ModelParams, group_vec: &[f64]) -> Vec<f64> {
    (0..p.item_latent.nrows())
        .map(|j| dot(group_vec, row(&p.item_latent, j)))
        .collect()
}

/// Top-`k` candidates by score (evaluation mode, no dropout).
pub fn rank_items(p: &ModelParams, group: &[usize], candidates: &[usize], k: usize) -> Vec<(usize, f64)> {
    let g = forward(p, group, None).group;
    let scored = candidates
        .iter()
        .map(|&j| (j, dot(&g, row(&p.item_latent, j))))
        .collect();
    top_k(scored, k)
}

/// Learned attention of one group, in the caller's member order.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub members: Vec<usize>,
    /// `alpha[l][m]`: weight of member `m` in member `l`'s sub-network.
    pub alpha: Vec<Vec<f64>>,
    /// Per-member impact: incoming attention averaged over sub-networks.
    pub beta: Vec<f64>,
}

pub fn attention_map(p: &ModelParams, group: &[usize]) -> AttentionMap {
    let fwd = forward(p, group, None);
    let n = fwd.n();
    let pos: Vec<usize> = group
        .iter()
        .map(|u| fwd.members.binary_search(u).expect("member present"))
        .collect();
    let impact = fwd.impact();
    let alpha = if n == 1 {
        vec![vec![0.0]]
    } else {
        pos.iter()
            .map(|&l| pos.iter().map(|&m| fwd.alpha[l * n + m]).collect())
            .collect()
    };
    AttentionMap {
        members: group.to_vec(),
        alpha,
        beta: pos.iter().map(|&i| impact[i]).collect(),
    }
}
