//! Embedding baselines that share MoSAN's parameters and BPR training:
//! plain averaging (MF-AVG) and a single attention layer over all members
//! (ATT-AVG).

use ndarray::Array1;

use crate::linalg::{axpy, dot, matvec, matvec_t_add, outer_add, row, softmax};
use crate::mosan::DropoutMask;
use crate::params::ModelParams;
use crate::training::GradientSet;

fn sorted(members: &[usize]) -> Vec<usize> {
    assert!(!members.is_empty(), "empty group");
    let mut m = members.to_vec();
    m.sort_unstable();
    m
}

/// Mean of the members' latent vectors.
pub fn mf_avg_group_rep(p: &ModelParams, group: &[usize]) -> Array1<f64> {
    Array1::from(mf_avg_forward(p, group).group)
}

#[derive(Debug, Clone)]
pub struct MeanForward {
    pub members: Vec<usize>,
    pub group: Vec<f64>,
}

pub fn mf_avg_forward(p: &ModelParams, group: &[usize]) -> MeanForward {
    let members = sorted(group);
    let share = 1.0 / members.len() as f64;
    let mut g = vec![0.0; p.user_latent.ncols()];
    for &u in &members {
        axpy(share, row(&p.user_latent, u), &mut g);
    }
    MeanForward { members, group: g }
}

pub fn mf_avg_backward(p: &ModelParams, fwd: &MeanForward, d_group: &[f64], scale: f64, grads: &mut GradientSet) {
    let dim = p.user_latent.ncols();
    let share = scale / fwd.members.len() as f64;
    for &u in &fwd.members {
        axpy(share, d_group, grads.user_latent_row(u, dim));
    }
}

#[derive(Debug, Clone)]
pub struct AttAvgForward {
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
    pub group: Vec<f64>,
    hidden: Vec<Vec<f64>>,
}

/// Member score `e_m = w . (W_u u_m + b) + d`, softmax over all members.
/// Mask slot `m` covers member position `m` in ascending order.
pub fn att_avg_forward(p: &ModelParams, group: &[usize], mask: Option<&DropoutMask>) -> AttAvgForward {
    let members = sorted(group);
    let w = p.w_out.as_slice().expect("contiguous");
    let hidden: Vec<Vec<f64>> = members
        .iter()
        .map(|&u| {
            matvec(&p.w_user, row(&p.user_latent, u))
                .into_iter()
                .zip(p.hidden_bias.iter())
                .map(|(x, b)| x + b)
                .collect()
        })
        .collect();
    let scores: Vec<f64> = hidden
        .iter()
        .enumerate()
        .map(|(m, h)| {
            let proj = match mask {
                None => dot(w, h),
                Some(k) => h.iter().zip(k.slot(m)).zip(w).map(|((h, k), w)| w * (h * k)).sum(),
            };
            proj + p.out_bias
        })
        .collect();
    let weights = softmax(&scores);
    let mut g = vec![0.0; p.user_latent.ncols()];
    for (&u, &a) in members.iter().zip(&weights) {
        axpy(a, row(&p.user_latent, u), &mut g);
    }
    AttAvgForward {
        members,
        weights,
        group: g,
        hidden,
    }
}

pub fn att_avg_group_rep(p: &ModelParams, group: &[usize], mask: Option<&DropoutMask>) -> Array1<f64> {
    Array1::from(att_avg_forward(p, group, mask).group)
}

pub fn att_avg_backward(
    p: &ModelParams,
    fwd: &AttAvgForward,
    mask: Option<&DropoutMask>,
    d_group: &[f64],
    scale: f64,
    grads: &mut GradientSet,
) {
    let dim = p.user_latent.ncols();
    let w = p.w_out.as_slice().expect("contiguous");
    let pull: Vec<f64> = fwd
        .members
        .iter()
        .map(|&u| dot(d_group, row(&p.user_latent, u)))
        .collect();
    let mean_pull: f64 = fwd.weights.iter().zip(&pull).map(|(a, e)| a * e).sum();
    for (pos, &u) in fwd.members.iter().enumerate() {
        let a = fwd.weights[pos];
        let da = scale * a * (pull[pos] - mean_pull);
        grads.out_bias += da;
        let h = &fwd.hidden[pos];
        let k = mask.map(|k| k.slot(pos));
        let delta: Vec<f64> = (0..h.len())
            .map(|j| {
                let kj = k.map_or(1.0, |k| k[j]);
                grads.w_out[j] += da * h[j] * kj;
                da * w[j] * kj
            })
            .collect();
        for (gb, d) in grads.hidden_bias.iter_mut().zip(&delta) {
            *gb += d;
        }
        outer_add(&mut grads.w_user, &delta, row(&p.user_latent, u));
        let gu = grads.user_latent_row(u, dim);
        axpy(scale * a, d_group, gu);
        matvec_t_add(&p.w_user, &delta, gu);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{init_params, Dims};
    use ndarray::array;

    fn params() -> ModelParams {
        let mut p = ModelParams::zeros(Dims {
            users: 3,
            items: 1,
            dim: 2,
            hidden: 1,
        });
        p.user_latent = array![[2.0, 0.0], [0.0, 2.0], [3.0, 0.0]];
        p
    }

    #[test]
    fn mean_of_members() {
        let p = params();
        assert_eq!(mf_avg_group_rep(&p, &[0, 1]), array![1.0, 1.0]);
        assert_eq!(mf_avg_group_rep(&p, &[2]), array![3.0, 0.0]);
    }

    #[test]
    fn att_avg_cases() {
        let mut p = params();
        // Equal scores: mean.
        assert_eq!(att_avg_group_rep(&p, &[0, 1], None), mf_avg_group_rep(&p, &[0, 1]));
        assert_eq!(att_avg_group_rep(&p, &[1], None), array![0.0, 2.0]);
        // Scores (ln 2, 0) over (3,0) and (0,3).
        p.user_latent = array![[3.0, 0.0], [0.0, 3.0], [0.0, 0.0]];
        p.w_user[[0, 0]] = 2f64.ln() / 3.0;
        p.w_out[0] = 1.0;
        let g = att_avg_group_rep(&p, &[0, 1], None);
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_attention_att_avg_equals_mf_avg_exactly() {
        let dims = Dims {
            users: 12,
            items: 3,
            dim: 7,
            hidden: 5,
        };
        let mut p = init_params(dims, 0.3, 5).unwrap();
        p.zero_attention();
        for group in [vec![0, 1], vec![3, 7, 9], vec![11, 2, 4, 6, 8]] {
            assert_eq!(att_avg_group_rep(&p, &group, None), mf_avg_group_rep(&p, &group));
        }
    }
}
