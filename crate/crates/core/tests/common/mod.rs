//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use mosan::params::{init_params, Dims, ModelParams};
use mosan::rng::{seeded, Rng};
use mosan::training::{batch_loss, gradients_with_masks, GradientSet, NeuralModel, Penalty, TrainingInstance};
use rand::seq::index::sample;
use rand::Rng as _;

/// Gaussian parameters with a random output bias, so the bias is live in
/// every check.
pub fn random_params(dims: Dims, std: f64, seed: u64) -> ModelParams {
    let mut p = init_params(dims, std, seed).unwrap();
    p.out_bias = seeded(seed ^ 0x5eed).gen_range(-1.0..1.0);
    p
}

/// `n` distinct users out of `users`, ascending.
pub fn random_group(rng: &mut Rng, users: usize, n: usize) -> Vec<usize> {
    let mut g = sample(rng, users, n).into_vec();
    g.sort_unstable();
    g
}

pub fn random_instance(rng: &mut Rng, dims: Dims, max_n: usize) -> TrainingInstance {
    let n = rng.gen_range(1..=max_n);
    let group = random_group(rng, dims.users, n);
    let items = sample(rng, dims.items, 2).into_vec();
    TrainingInstance::new(group, items[0], items[1])
}

pub const TENSORS: [&str; 7] = ["U", "C", "V", "W_c", "W_u", "b", "w"];

fn entry<'a>(p: &'a mut ModelParams, tensor: &str, idx: usize) -> &'a mut f64 {
    let flat = |a: &'a mut ndarray::Array2<f64>| &mut a.as_slice_mut().unwrap()[idx];
    match tensor {
        "U" => flat(&mut p.user_latent),
        "C" => flat(&mut p.user_context),
        "V" => flat(&mut p.item_latent),
        "W_c" => flat(&mut p.w_context),
        "W_u" => flat(&mut p.w_user),
        "b" => &mut p.hidden_bias[idx],
        "w" => &mut p.w_out[idx],
        "d" => &mut p.out_bias,
        _ => unreachable!(),
    }
}

fn len(p: &ModelParams, tensor: &str) -> usize {
    match tensor {
        "U" => p.user_latent.len(),
        "C" => p.user_context.len(),
        "V" => p.item_latent.len(),
        "W_c" => p.w_context.len(),
        "W_u" => p.w_user.len(),
        "b" => p.hidden_bias.len(),
        "w" => p.w_out.len(),
        _ => 1,
    }
}

fn analytic(g: &GradientSet, tensor: &str, idx: usize, dim: usize) -> f64 {
    let sparse = |m: &std::collections::BTreeMap<usize, Vec<f64>>| m.get(&(idx / dim)).map_or(0.0, |r| r[idx % dim]);
    match tensor {
        "U" => sparse(&g.user_latent),
        "C" => sparse(&g.user_context),
        "V" => sparse(&g.item_latent),
        "W_c" => g.w_context.as_slice().unwrap()[idx],
        "W_u" => g.w_user.as_slice().unwrap()[idx],
        "b" => g.hidden_bias[idx],
        "w" => g.w_out[idx],
        "d" => g.out_bias,
        _ => unreachable!(),
    }
}

/// Relative error with a floor on the denominator, so entries whose true
/// gradient is ~0 are judged by absolute error.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub struct FdReport {
    /// Worst relative error per tensor, in [`TENSORS`] order.
    pub max_rel: [f64; 7],
    /// Analytic gradient of the output bias.
    pub d_analytic: f64,
    /// Central-difference gradient of the output bias.
    pub d_numeric: f64,
}

/// Compares analytic gradients of the mean batch loss against central
/// differences with step `eps`, dropout off, over every parameter entry.
pub fn finite_difference_check(
    model: NeuralModel,
    p: &ModelParams,
    batch: &[TrainingInstance],
    penalty: Penalty,
    eps: f64,
) -> FdReport {
    let masks = vec![None; batch.len()];
    let (_, g) = gradients_with_masks(model, p, batch, penalty, &masks).unwrap();
    let dim = p.dims().dim;
    let mut work = p.clone();
    let mut numeric = |tensor: &str, idx: usize| {
        let orig = *entry(&mut work, tensor, idx);
        *entry(&mut work, tensor, idx) = orig + eps;
        let up = batch_loss(model, &work, batch, penalty, &masks);
        *entry(&mut work, tensor, idx) = orig - eps;
        let down = batch_loss(model, &work, batch, penalty, &masks);
        *entry(&mut work, tensor, idx) = orig;
        (up - down) / (2.0 * eps)
    };
    let mut max_rel = [0.0; 7];
    for (t, tensor) in TENSORS.iter().enumerate() {
        for idx in 0..len(p, tensor) {
            let err = rel_err(analytic(&g, tensor, idx, dim), numeric(tensor, idx));
            max_rel[t] = f64::max(max_rel[t], err);
        }
    }
    FdReport {
        max_rel,
        d_analytic: analytic(&g, "d", 0, dim),
        d_numeric: numeric("d", 0),
    }
}

/// Brute-force top-K metrics straight from the definitions.
pub fn brute_metrics(ranked: &[usize], truth: usize, k: usize) -> (f64, f64, f64) {
    let top = &ranked[..k.min(ranked.len())];
    let hits = top.iter().filter(|&&i| i == truth).count() as f64;
    let dcg: f64 = top
        .iter()
        .enumerate()
        .filter(|(_, &i)| i == truth)
        .map(|(pos, _)| 1.0 / ((pos + 2) as f64).log2())
        .sum();
    // One relevant item: the ideal DCG is 1.
    (hits / k as f64, hits, dcg)
}
