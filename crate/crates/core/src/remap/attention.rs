//! Single transformer block over `segments` pseudo-tokens of width `u / segments`,
//! post-norm residual layout.

use super::ops::{
    gelu, gelu_grad, layer_norm, layer_norm_backward, matmul, matmul_a_bt, matmul_at_b_acc, NormCache,
};
use super::{Gradients, RemapParams};
use crate::scalar::Scalar;

const Q: usize = 0;
const K: usize = 1;
const V: usize = 2;
const O: usize = 3;
const OB: usize = 4;
const G1: usize = 5;
const B1: usize = 6;
const W1: usize = 7;
const C1: usize = 8;
const W2: usize = 9;
const C2: usize = 10;
const G2: usize = 11;
const B2: usize = 12;

#[derive(Debug, Clone)]
pub struct Cache<T> {
    tokens: Vec<T>,
    q: Vec<Vec<T>>,
    k: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    attn: Vec<Vec<T>>,
    heads_out: Vec<Vec<T>>,
    norm1: NormCache<T>,
    y1: Vec<T>,
    pre: Vec<T>,
    act: Vec<T>,
    norm2: NormCache<T>,
}

struct Dims {
    s: usize,
    d: usize,
    h: usize,
    dh: usize,
    f: usize,
}

fn dims<T>(p: &RemapParams<T>) -> Dims {
    let s = p.config.segments;
    let d = p.dim / s;
    let h = p.config.heads;
    Dims { s, d, h, dh: d / h, f: p.config.hidden }
}

pub fn forward<T: Scalar>(p: &RemapParams<T>, x: &[T]) -> (Vec<T>, Cache<T>) {
    let Dims { s, d, h, dh, f } = dims(p);
    let t = &p.tensors;
    let tokens = x.to_vec();
    let scale = T::one() / T::from_usize_lossy(dh).sqrt();

    let mut residual = tokens.clone();
    for r in 0..s {
        for j in 0..d {
            residual[r * d + j] += t[OB].data[j];
        }
    }
    let (mut qs, mut ks, mut vs, mut attns, mut outs) = (vec![], vec![], vec![], vec![], vec![]);
    let mut proj = vec![T::zero(); s * d];
    for head in 0..h {
        let w = |i: usize| &t[i].data[head * d * dh..(head + 1) * d * dh];
        let mut q = vec![T::zero(); s * dh];
        let mut k = vec![T::zero(); s * dh];
        let mut v = vec![T::zero(); s * dh];
        matmul(&tokens, w(Q), s, d, dh, &mut q);
        matmul(&tokens, w(K), s, d, dh, &mut k);
        matmul(&tokens, w(V), s, d, dh, &mut v);
        let mut a = vec![T::zero(); s * s];
        matmul_a_bt(&q, &k, s, dh, s, &mut a);
        for r in 0..s {
            let row = &mut a[r * s..(r + 1) * s];
            let mx = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v * scale));
            let mut sum = T::zero();
            for e in row.iter_mut() {
                *e = (*e * scale - mx).exp();
                sum += *e;
            }
            row.iter_mut().for_each(|e| *e /= sum);
        }
        let mut o = vec![T::zero(); s * dh];
        matmul(&a, &v, s, s, dh, &mut o);
        matmul(&o, &t[O].data[head * dh * d..(head + 1) * dh * d], s, dh, d, &mut proj);
        for (r, &pv) in residual.iter_mut().zip(&proj) {
            *r += pv;
        }
        qs.push(q);
        ks.push(k);
        vs.push(v);
        attns.push(a);
        outs.push(o);
    }

    let mut y1 = vec![T::zero(); s * d];
    let norm1 = layer_norm(&residual, s, d, &t[G1].data, &t[B1].data, &mut y1);

    let mut pre = vec![T::zero(); s * f];
    matmul(&y1, &t[W1].data, s, d, f, &mut pre);
    for r in 0..s {
        for j in 0..f {
            pre[r * f + j] += t[C1].data[j];
        }
    }
    let act: Vec<T> = pre.iter().map(|&v| gelu(v)).collect();
    let mut ffn = vec![T::zero(); s * d];
    matmul(&act, &t[W2].data, s, f, d, &mut ffn);
    let mut r2 = y1.clone();
    for r in 0..s {
        for j in 0..d {
            r2[r * d + j] += ffn[r * d + j] + t[C2].data[j];
        }
    }
    let mut z = vec![T::zero(); s * d];
    let norm2 = layer_norm(&r2, s, d, &t[G2].data, &t[B2].data, &mut z);

    let cache = Cache {
        tokens,
        q: qs,
        k: ks,
        v: vs,
        attn: attns,
        heads_out: outs,
        norm1,
        y1,
        pre,
        act,
        norm2,
    };
    (z, cache)
}

pub fn backward<T: Scalar>(p: &RemapParams<T>, c: &Cache<T>, dz: &[T], g: &mut Gradients<T>) {
    let Dims { s, d, h, dh, f } = dims(p);
    let t = &p.tensors;
    let scale = T::one() / T::from_usize_lossy(dh).sqrt();

    let (dg2, rest) = g.split_at_mut(B2);
    let dr2 = layer_norm_backward(dz, &c.norm2, s, d, &t[G2].data, &mut dg2[G2].data, &mut rest[0].data);

    for r in 0..s {
        for j in 0..d {
            g[C2].data[j] += dr2[r * d + j];
        }
    }
    matmul_at_b_acc(&c.act, &dr2, s, f, d, &mut g[W2].data);
    let mut dact = vec![T::zero(); s * f];
    matmul_a_bt(&dr2, &t[W2].data, s, d, f, &mut dact);
    let dpre: Vec<T> = dact.iter().zip(&c.pre).map(|(&da, &x)| da * gelu_grad(x)).collect();
    for r in 0..s {
        for j in 0..f {
            g[C1].data[j] += dpre[r * f + j];
        }
    }
    matmul_at_b_acc(&c.y1, &dpre, s, d, f, &mut g[W1].data);
    let mut dy1 = vec![T::zero(); s * d];
    matmul_a_bt(&dpre, &t[W1].data, s, f, d, &mut dy1);
    for (a, &b) in dy1.iter_mut().zip(&dr2) {
        *a += b;
    }

    let (dg1, rest) = g.split_at_mut(B1);
    let dr1 = layer_norm_backward(&dy1, &c.norm1, s, d, &t[G1].data, &mut dg1[G1].data, &mut rest[0].data);

    for r in 0..s {
        for j in 0..d {
            g[OB].data[j] += dr1[r * d + j];
        }
    }
    let mut do_ = vec![T::zero(); s * dh];
    let mut da = vec![T::zero(); s * s];
    let mut dv = vec![T::zero(); s * dh];
    let mut dq = vec![T::zero(); s * dh];
    let mut dk = vec![T::zero(); s * dh];
    for head in 0..h {
        let wo = &t[O].data[head * dh * d..(head + 1) * dh * d];
        let span = head * d * dh..(head + 1) * d * dh;
        matmul_at_b_acc(&c.heads_out[head], &dr1, s, dh, d, &mut g[O].data[head * dh * d..(head + 1) * dh * d]);
        matmul_a_bt(&dr1, wo, s, d, dh, &mut do_);
        matmul_a_bt(&do_, &c.v[head], s, dh, s, &mut da);
        let a = &c.attn[head];
        dv.iter_mut().for_each(|v| *v = T::zero());
        matmul_at_b_acc(a, &do_, s, s, dh, &mut dv);
        // softmax backward, folded with the score scale
        let mut ds = vec![T::zero(); s * s];
        for r in 0..s {
            let row_a = &a[r * s..(r + 1) * s];
            let row_d = &da[r * s..(r + 1) * s];
            let inner: T = row_a.iter().zip(row_d).map(|(&x, &y)| x * y).sum();
            for j in 0..s {
                ds[r * s + j] = row_a[j] * (row_d[j] - inner) * scale;
            }
        }
        matmul(&ds, &c.k[head], s, s, dh, &mut dq);
        dk.iter_mut().for_each(|v| *v = T::zero());
        matmul_at_b_acc(&ds, &c.q[head], s, s, dh, &mut dk);
        matmul_at_b_acc(&c.tokens, &dq, s, d, dh, &mut g[Q].data[span.clone()]);
        matmul_at_b_acc(&c.tokens, &dk, s, d, dh, &mut g[K].data[span.clone()]);
        matmul_at_b_acc(&c.tokens, &dv, s, d, dh, &mut g[V].data[span]);
    }
}
