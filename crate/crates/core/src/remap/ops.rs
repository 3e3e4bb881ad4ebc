//! Row-major slice kernels for the network passes.

use crate::scalar::Scalar;

/// `out (m x n) = a (m x k) * b (k x n)`
pub fn matmul<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    out[..m * n].iter_mut().for_each(|v| *v = T::zero());
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            for (o, &bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += av * bv;
            }
        }
    }
}

/// `out (k x n) += a^T * b` with `a (m x k)`, `b (m x n)`
pub fn matmul_at_b_acc<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            let row = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(&b[i * n..(i + 1) * n]) {
                *o += av * bv;
            }
        }
    }
}

/// `out (m x k) = a (m x n) * b^T` with `b (k x n)`
pub fn matmul_a_bt<T: Scalar>(a: &[T], b: &[T], m: usize, n: usize, k: usize, out: &mut [T]) {
    for i in 0..m {
        for p in 0..k {
            out[i * k + p] = crate::scalar::dot(&a[i * n..(i + 1) * n], &b[p * n..(p + 1) * n]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormCache<T> {
    pub normalized: Vec<T>,
    pub inv_std: Vec<T>,
}

pub const LN_EPS: f64 = 1e-5;

/// Per-row layer normalization of an `rows x width` block.
pub fn layer_norm<T: Scalar>(x: &[T], rows: usize, width: usize, gain: &[T], bias: &[T], out: &mut [T]) -> NormCache<T> {
    let eps = T::lit(LN_EPS);
    let w = T::from_usize_lossy(width);
    let mut normalized = vec![T::zero(); rows * width];
    let mut inv_std = vec![T::zero(); rows];
    for r in 0..rows {
        let row = &x[r * width..(r + 1) * width];
        let mean = row.iter().copied().sum::<T>() / w;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / w;
        let inv = T::one() / (var + eps).sqrt();
        inv_std[r] = inv;
        for j in 0..width {
            let n = (row[j] - mean) * inv;
            normalized[r * width + j] = n;
            out[r * width + j] = gain[j] * n + bias[j];
        }
    }
    NormCache { normalized, inv_std }
}

/// Returns `d input`, accumulating gain and bias gradients.
pub fn layer_norm_backward<T: Scalar>(
    dy: &[T],
    cache: &NormCache<T>,
    rows: usize,
    width: usize,
    gain: &[T],
    dgain: &mut [T],
    dbias: &mut [T],
) -> Vec<T> {
    let w = T::from_usize_lossy(width);
    let mut dx = vec![T::zero(); rows * width];
    let mut dn = vec![T::zero(); width];
    for r in 0..rows {
        let n = &cache.normalized[r * width..(r + 1) * width];
        let g = &dy[r * width..(r + 1) * width];
        for j in 0..width {
            dgain[j] += g[j] * n[j];
            dbias[j] += g[j];
            dn[j] = g[j] * gain[j];
        }
        let mean_dn = dn.iter().copied().sum::<T>() / w;
        let mean_dn_n = dn.iter().zip(n).map(|(&a, &b)| a * b).sum::<T>() / w;
        let inv = cache.inv_std[r];
        for j in 0..width {
            dx[r * width + j] = inv * (dn[j] - mean_dn - n[j] * mean_dn_n);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// Tanh-approximated GELU.
pub fn gelu<T: Scalar>(x: T) -> T {
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let half = T::lit(0.5);
    half * x * (T::one() + (c * (x + a * x * x * x)).tanh())
}

pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let half = T::lit(0.5);
    let t = (c * (x + a * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0) * a * x * x)
}
