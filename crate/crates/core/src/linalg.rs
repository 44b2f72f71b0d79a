//! Small dense kernels with a fixed summation order.

use ndarray::{Array2, ArrayView1};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `W x` for a row-major `rows x cols` matrix.
pub fn matvec(w: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    w.rows()
        .into_iter()
        .map(|r| dot(r.as_slice().expect("row-major"), x))
        .collect()
}

/// `out += W^T y`
pub fn matvec_t_add(w: &Array2<f64>, y: &[f64], out: &mut [f64]) {
    for (r, &yi) in w.rows().into_iter().zip(y) {
        if yi != 0.0 {
            axpy(yi, r.as_slice().expect("row-major"), out);
        }
    }
}

/// `G += y x^T`
pub fn outer_add(g: &mut Array2<f64>, y: &[f64], x: &[f64]) {
    for (mut r, &yi) in g.rows_mut().into_iter().zip(y) {
        if yi != 0.0 {
            axpy(yi, x, r.as_slice_mut().expect("row-major"));
        }
    }
}

pub fn row(a: &Array2<f64>, i: usize) -> &[f64] {
    let start = i * a.ncols();
    &a.as_slice().expect("row-major")[start..start + a.ncols()]
}

pub fn view(a: &[f64]) -> ArrayView1<'_, f64> {
    ArrayView1::from(a)
}

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
