use serde::{Deserialize, Serialize};

use super::{Gradients, RemapParams, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { lr: 3e-5, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(tensors: &[Tensor<T>]) -> Self {
        let z: Vec<_> = tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect();
        Self { m: z.clone(), v: z, step: 0 }
    }
}

/// Adam with decoupled weight decay, applied in place to any tensor list.
pub fn adamw_update<T: Scalar>(
    tensors: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut OptimizerState<T>,
    cfg: &AdamWConfig,
) -> Result<()> {
    if grads.len() != tensors.len() || state.m.len() != tensors.len() {
        return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
    }
    for (t, g) in tensors.iter().zip(grads) {
        if t.shape != g.shape {
            return Err(Error::ShapeMismatch(format!("gradient {:?} for parameter {:?}", g.shape, t.shape)));
        }
        if g.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("gradient".into()));
        }
    }
    state.step += 1;
    let step = state.step as i32;
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let (lr, eps, wd) = (T::lit(cfg.lr), T::lit(cfg.eps), T::lit(cfg.weight_decay));
    let c1 = T::one() - b1.powi(step);
    let c2 = T::one() - b2.powi(step);
    for (((t, g), m), v) in tensors.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        for i in 0..t.data.len() {
            let gi = g.data[i];
            m.data[i] = b1 * m.data[i] + (T::one() - b1) * gi;
            v.data[i] = b2 * v.data[i] + (T::one() - b2) * gi * gi;
            let mhat = m.data[i] / c1;
            let vhat = v.data[i] / c2;
            let w = t.data[i];
            t.data[i] = w - lr * wd * w - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

/// One optimizer step on the remapping network.
pub fn adamw_step<T: Scalar>(
    params: &mut RemapParams<T>,
    grads: &Gradients<T>,
    state: &mut OptimizerState<T>,
    cfg: &AdamWConfig,
) -> Result<()> {
    adamw_update(&mut params.tensors, grads, state, cfg)?;
    params.version += 1;
    Ok(())
}
