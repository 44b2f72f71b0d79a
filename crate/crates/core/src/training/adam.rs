use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::params::{HyperParams, ModelParams};
use crate::training::GradientSet;

/// First/second moment accumulators with a global step counter.
///
/// Embedding rows are updated lazily: a row's moments only move on steps where
/// the row has a gradient. Bias correction always uses the global step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: Moments,
    v: Moments,
}

#[derive(Debug, Clone, PartialEq)]
struct Moments {
    user_latent: Array2<f64>,
    user_context: Array2<f64>,
    item_latent: Array2<f64>,
    w_context: Array2<f64>,
    w_user: Array2<f64>,
    hidden_bias: Array1<f64>,
    w_out: Array1<f64>,
    out_bias: f64,
}

impl Moments {
    fn zeros_like(p: &ModelParams) -> Self {
        Self {
            user_latent: Array2::zeros(p.user_latent.raw_dim()),
            user_context: Array2::zeros(p.user_context.raw_dim()),
            item_latent: Array2::zeros(p.item_latent.raw_dim()),
            w_context: Array2::zeros(p.w_context.raw_dim()),
            w_user: Array2::zeros(p.w_user.raw_dim()),
            hidden_bias: Array1::zeros(p.hidden_bias.raw_dim()),
            w_out: Array1::zeros(p.w_out.raw_dim()),
            out_bias: 0.0,
        }
    }
}

struct Update {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    correct1: f64,
    correct2: f64,
}

impl Update {
    #[inline]
    fn apply(&self, theta: &mut f64, m: &mut f64, v: &mut f64, g: f64) {
        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
        let m_hat = *m / self.correct1;
        let v_hat = *v / self.correct2;
        *theta -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
    }

    fn slice(&self, theta: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]) {
        for (((t, m), v), &g) in theta.iter_mut().zip(m).zip(v).zip(g) {
            self.apply(t, m, v, g);
        }
    }
}

fn row_mut(a: &mut Array2<f64>, i: usize) -> &mut [f64] {
    let cols = a.ncols();
    &mut a.as_slice_mut().expect("row-major")[i * cols..(i + 1) * cols]
}

fn dense(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("row-major")
}

impl AdamState {
    pub fn new(p: &ModelParams) -> Self {
        Self {
            step: 0,
            m: Moments::zeros_like(p),
            v: Moments::zeros_like(p),
        }
    }

    /// One Adam step with bias correction. Fails if any updated entry is not
    /// finite; parameters may then be partially updated.
    pub fn step(&mut self, p: &mut ModelParams, g: &GradientSet, hp: &HyperParams) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let up = Update {
            lr: hp.learning_rate,
            beta1: hp.beta1,
            beta2: hp.beta2,
            eps: hp.eps,
            correct1: 1.0 - hp.beta1.powi(t),
            correct2: 1.0 - hp.beta2.powi(t),
        };
        let (m, v) = (&mut self.m, &mut self.v);
        for (&i, gr) in &g.user_latent {
            up.slice(
                row_mut(&mut p.user_latent, i),
                row_mut(&mut m.user_latent, i),
                row_mut(&mut v.user_latent, i),
                gr,
            );
        }
        for (&i, gr) in &g.user_context {
            up.slice(
                row_mut(&mut p.user_context, i),
                row_mut(&mut m.user_context, i),
                row_mut(&mut v.user_context, i),
                gr,
            );
        }
        for (&i, gr) in &g.item_latent {
            up.slice(
                row_mut(&mut p.item_latent, i),
                row_mut(&mut m.item_latent, i),
                row_mut(&mut v.item_latent, i),
                gr,
            );
        }
        up.slice(
            dense(&mut p.w_context),
            dense(&mut m.w_context),
            dense(&mut v.w_context),
            g.w_context.as_slice().unwrap(),
        );
        up.slice(
            dense(&mut p.w_user),
            dense(&mut m.w_user),
            dense(&mut v.w_user),
            g.w_user.as_slice().unwrap(),
        );
        up.slice(
            p.hidden_bias.as_slice_mut().unwrap(),
            m.hidden_bias.as_slice_mut().unwrap(),
            v.hidden_bias.as_slice_mut().unwrap(),
            g.hidden_bias.as_slice().unwrap(),
        );
        up.slice(
            p.w_out.as_slice_mut().unwrap(),
            m.w_out.as_slice_mut().unwrap(),
            v.w_out.as_slice_mut().unwrap(),
            g.w_out.as_slice().unwrap(),
        );
        up.apply(&mut p.out_bias, &mut m.out_bias, &mut v.out_bias, g.out_bias);

        let rows_ok = |a: &Array2<f64>, rows: &std::collections::BTreeMap<usize, Vec<f64>>| {
            rows.keys().all(|&i| a.row(i).iter().all(|x| x.is_finite()))
        };
        let ok = rows_ok(&p.user_latent, &g.user_latent)
            && rows_ok(&p.user_context, &g.user_context)
            && rows_ok(&p.item_latent, &g.item_latent)
            && p.w_context
                .iter()
                .chain(&p.w_user)
                .chain(&p.hidden_bias)
                .chain(&p.w_out)
                .all(|x| x.is_finite())
            && p.out_bias.is_finite();
        if !ok {
            return Err(Error::NonFinite(format!(
                "Adam step {} produced a non-finite parameter",
                self.step
            )));
        }
        Ok(())
    }
}
