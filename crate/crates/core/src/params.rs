//! Trainable tensors, hyperparameters and the binary parameter file.
//!
//! File layout (little endian): magic `MOSAN1`, then `M N D H` as `u64`, then
//! `U C V W_c W_u b w d` as row-major `f64`.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::seeded;

pub const MAGIC: &[u8; 6] = b"MOSAN1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub users: usize,
    pub items: usize,
    pub dim: usize,
    pub hidden: usize,
}

/// All trainable tensors.
///
/// `user_latent` rows are attended over and scored; `user_context` rows only
/// identify the owner of a sub-attention network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub user_latent: Array2<f64>,
    pub user_context: Array2<f64>,
    pub item_latent: Array2<f64>,
    pub w_context: Array2<f64>,
    pub w_user: Array2<f64>,
    pub hidden_bias: Array1<f64>,
    pub w_out: Array1<f64>,
    pub out_bias: f64,
}

impl ModelParams {
    pub fn zeros(dims: Dims) -> Self {
        let Dims {
            users,
            items,
            dim,
            hidden,
        } = dims;
        Self {
            user_latent: Array2::zeros((users, dim)),
            user_context: Array2::zeros((users, dim)),
            item_latent: Array2::zeros((items, dim)),
            w_context: Array2::zeros((hidden, dim)),
            w_user: Array2::zeros((hidden, dim)),
            hidden_bias: Array1::zeros(hidden),
            w_out: Array1::zeros(hidden),
            out_bias: 0.0,
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            users: self.user_latent.nrows(),
            items: self.item_latent.nrows(),
            dim: self.user_latent.ncols(),
            hidden: self.w_user.nrows(),
        }
    }

    /// Zeroes every attention-network tensor, leaving embeddings untouched.
    pub fn zero_attention(&mut self) {
        self.w_context.fill(0.0);
        self.w_user.fill(0.0);
        self.hidden_bias.fill(0.0);
        self.w_out.fill(0.0);
        self.out_bias = 0.0;
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())) && self.out_bias.is_finite()
    }

    fn tensors(&self) -> [&[f64]; 7] {
        [
            slice(&self.user_latent),
            slice(&self.user_context),
            slice(&self.item_latent),
            slice(&self.w_context),
            slice(&self.w_user),
            self.hidden_bias.as_slice().expect("contiguous"),
            self.w_out.as_slice().expect("contiguous"),
        ]
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

/// Training hyperparameters. Defaults are the tuned values used for the
/// published experiments, except `hidden`, `epochs` and `patience`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub dim: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub dropout: f64,
    pub negatives: usize,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    pub init_std: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            dim: 50,
            hidden: 50,
            batch_size: 256,
            learning_rate: 0.001,
            l2: 0.01,
            dropout: 0.5,
            negatives: 3,
            epochs: 100,
            patience: 10,
            seed: 0,
            init_std: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.dim == 0 || self.hidden == 0 {
            return bad("dim and hidden must be at least 1");
        }
        if self.batch_size == 0 || self.negatives == 0 {
            return bad("batch_size and negatives must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.learning_rate) || !positive(self.init_std) || !positive(self.eps) {
            return bad("learning_rate, init_std and eps must be positive");
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return bad("l2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Draws every entry i.i.d. from `Normal(0, std^2)`; the output bias starts at 0.
pub fn init_params(dims: Dims, std: f64, seed: u64) -> Result<ModelParams> {
    if dims.users == 0 || dims.items == 0 || dims.dim == 0 || dims.hidden == 0 {
        return Err(Error::InvalidArgument(format!("all dims must be >= 1, got {dims:?}")));
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidArgument(format!("init std {std}: {e}")))?;
    let mut rng = seeded(seed);
    let mut p = ModelParams::zeros(dims);
    for t in [
        &mut p.user_latent,
        &mut p.user_context,
        &mut p.item_latent,
        &mut p.w_context,
        &mut p.w_user,
    ] {
        t.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
    }
    for t in [&mut p.hidden_bias, &mut p.w_out] {
        t.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
    }
    Ok(p)
}

pub fn save_params<W: Write>(p: &ModelParams, mut sink: W) -> Result<()> {
    let d = p.dims();
    let mut buf = Vec::with_capacity(6 + 32 + 8 * param_count(d));
    buf.extend_from_slice(MAGIC);
    for n in [d.users, d.items, d.dim, d.hidden] {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for t in p.tensors() {
        for x in t {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf.extend_from_slice(&p.out_bias.to_le_bytes());
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(())
}

fn param_count(d: Dims) -> usize {
    2 * d.users * d.dim + d.items * d.dim + 2 * d.hidden * d.dim + 2 * d.hidden + 1
}

pub fn load_params<R: Read>(mut source: R) -> Result<ModelParams> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 6 || &bytes[..6] != MAGIC {
        return Err(Error::Format(
            "not a MOSAN1 parameter file (bad magic or version)".into(),
        ));
    }
    if bytes.len() < 38 {
        return Err(Error::Format("truncated header".into()));
    }
    let header: Vec<usize> = bytes[6..38]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let dims = Dims {
        users: header[0],
        items: header[1],
        dim: header[2],
        hidden: header[3],
    };
    if header.contains(&0) {
        return Err(Error::Format(format!("zero dimension in header {dims:?}")));
    }
    let expected = dims
        .users
        .checked_mul(dims.dim)
        .and_then(|_| param_count(dims).checked_mul(8))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    let body = &bytes[38..];
    if body.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "header {dims:?} needs {expected} bytes of tensors, file has {}",
            body.len()
        )));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take2 = |rows: usize, cols: usize| {
        Array2::from_shape_vec((rows, cols), values.by_ref().take(rows * cols).collect()).expect("length checked")
    };
    let user_latent = take2(dims.users, dims.dim);
    let user_context = take2(dims.users, dims.dim);
    let item_latent = take2(dims.items, dims.dim);
    let w_context = take2(dims.hidden, dims.dim);
    let w_user = take2(dims.hidden, dims.dim);
    let hidden_bias = Array1::from_iter(values.by_ref().take(dims.hidden));
    let w_out = Array1::from_iter(values.by_ref().take(dims.hidden));
    let out_bias = values.next().expect("length checked");
    let p = ModelParams {
        user_latent,
        user_context,
        item_latent,
        w_context,
        w_user,
        hidden_bias,
        w_out,
        out_bias,
    };
    if !p.all_finite() {
        return Err(Error::NonFinite("parameter file contains NaN or Inf".into()));
    }
    Ok(p)
}

/// Loads parameters and checks them against the dataset's user/item counts.
pub fn load_params_checked<R: Read>(source: R, users: usize, items: usize) -> Result<ModelParams> {
    let p = load_params(source)?;
    let d = p.dims();
    if d.users != users || d.items != items {
        return Err(Error::DimensionMismatch(format!(
            "parameters are {} users x {} items, dataset has {users} x {items}",
            d.users, d.items
        )));
    }
    Ok(p)
}
