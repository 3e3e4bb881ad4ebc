//! Residual tanh MLP: `z = x + W_L(... tanh(W_1 x + b_1) ...) + b_L`.

use super::ops::{matmul, matmul_a_bt, matmul_at_b_acc};
use super::{Gradients, RemapParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Cache<T> {
    /// Layer inputs; `acts[0]` is the network input.
    acts: Vec<Vec<T>>,
}

pub fn forward<T: Scalar>(p: &RemapParams<T>, x: &[T]) -> (Vec<T>, Cache<T>) {
    let layers = p.tensors.len() / 2;
    let mut acts = vec![x.to_vec()];
    let mut out = Vec::new();
    for l in 0..layers {
        let w = &p.tensors[2 * l];
        let b = &p.tensors[2 * l + 1];
        let (fan_in, fan_out) = (w.shape[0], w.shape[1]);
        let mut y = vec![T::zero(); fan_out];
        matmul(acts.last().unwrap(), &w.data, 1, fan_in, fan_out, &mut y);
        for (v, &bv) in y.iter_mut().zip(&b.data) {
            *v += bv;
        }
        if l + 1 < layers {
            acts.push(y.into_iter().map(|v| v.tanh()).collect());
        } else {
            out = y;
        }
    }
    for (o, &xv) in out.iter_mut().zip(x) {
        *o += xv;
    }
    (out, Cache { acts })
}

pub fn backward<T: Scalar>(p: &RemapParams<T>, c: &Cache<T>, dz: &[T], g: &mut Gradients<T>) {
    let layers = p.tensors.len() / 2;
    let mut delta = dz.to_vec();
    for l in (0..layers).rev() {
        let w = &p.tensors[2 * l];
        let (fan_in, fan_out) = (w.shape[0], w.shape[1]);
        let input = &c.acts[l];
        matmul_at_b_acc(input, &delta, 1, fan_in, fan_out, &mut g[2 * l].data);
        for (gb, &dv) in g[2 * l + 1].data.iter_mut().zip(&delta) {
            *gb += dv;
        }
        if l > 0 {
            let mut back = vec![T::zero(); fan_in];
            matmul_a_bt(&delta, &w.data, 1, fan_out, fan_in, &mut back);
            delta = back.iter().zip(input).map(|(&b, &a)| b * (T::one() - a * a)).collect();
        }
    }
}
