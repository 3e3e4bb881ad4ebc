use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::HeadConfig;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::remap::{adamw_update, AdamWConfig, OptimizerState, Tensor};
use crate::scalar::Scalar;
use crate::seed;

/// Single linear layer with a softmax over `labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead<T> {
    pub labels: Vec<i32>,
    /// `|labels| x u`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub dim: usize,
}

impl<T: Scalar> LinearHead<T> {
    pub fn logits(&self, x: &[T]) -> Vec<T> {
        (0..self.labels.len())
            .map(|c| crate::scalar::dot(&self.weights[c * self.dim..(c + 1) * self.dim], x) + self.bias[c])
            .collect()
    }

    pub fn probabilities(&self, x: &[T]) -> Vec<T> {
        softmax(&self.logits(x))
    }

    /// Most probable label; ties go to the earlier label.
    pub fn predict(&self, x: &[T]) -> i32 {
        let l = self.logits(x);
        let best = (1..l.len()).fold(0, |b, i| if l[i] > l[b] { i } else { b });
        self.labels[best]
    }
}

fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let mx = z.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let e: Vec<T> = z.iter().map(|&v| (v - mx).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadReport {
    /// Mean cross-entropy per epoch.
    pub loss_curve: Vec<f64>,
    pub train_accuracy: f64,
}

/// Softmax cross-entropy with AdamW minibatches, zero-initialized.
pub fn train_classifier<T: Scalar>(
    features: &Matrix<T>,
    labels: &[i32],
    label_set: &[i32],
    cfg: &HeadConfig,
    seed: u64,
) -> Result<(LinearHead<T>, HeadReport)> {
    let n = features.rows();
    if n != labels.len() {
        return Err(Error::ShapeMismatch(format!("{n} feature rows for {} labels", labels.len())));
    }
    if !features.is_finite() {
        return Err(Error::NonFiniteValue("classifier features".into()));
    }
    let class_of = |l: i32| label_set.iter().position(|&v| v == l);
    let mut targets = Vec::with_capacity(n);
    for &l in labels {
        targets.push(class_of(l).ok_or_else(|| Error::InvalidArgument(format!("label {l} is not in the label set")))?);
    }
    for (c, &l) in label_set.iter().enumerate() {
        if !targets.contains(&c) {
            return Err(Error::MissingLabel { group: "training data", label: l });
        }
    }
    let (k, u) = (label_set.len(), features.cols());
    let mut tensors = vec![Tensor::<T>::zeros(&[k, u]), Tensor::zeros(&[k])];
    let mut state = OptimizerState::new(&tensors);
    let opt = AdamWConfig { lr: cfg.lr, weight_decay: cfg.weight_decay, ..Default::default() };
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut grads = vec![Tensor::<T>::zeros(&[k, u]), Tensor::zeros(&[k])];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grads.iter_mut().for_each(|g| g.data.iter_mut().for_each(|v| *v = T::zero()));
            let scale = T::one() / T::from_usize_lossy(batch.len());
            for &i in batch {
                let x = features.row(i);
                let logits = (0..k)
                    .map(|c| crate::scalar::dot(&tensors[0].data[c * u..(c + 1) * u], x) + tensors[1].data[c])
                    .collect::<Vec<_>>();
                let p = softmax(&logits);
                epoch_loss -= p[targets[i]].max(T::min_positive_value()).ln().to_f64_lossy();
                for c in 0..k {
                    let d = (p[c] - if c == targets[i] { T::one() } else { T::zero() }) * scale;
                    grads[1].data[c] += d;
                    for (g, &xv) in grads[0].data[c * u..(c + 1) * u].iter_mut().zip(x) {
                        *g += d * xv;
                    }
                }
            }
            adamw_update(&mut tensors, &grads, &mut state, &opt)?;
        }
        loss_curve.push(epoch_loss / n as f64);
    }
    let [w, b]: [Tensor<T>; 2] = tensors.try_into().expect("two tensors");
    let head = LinearHead { labels: label_set.to_vec(), weights: w.data, bias: b.data, dim: u };
    let correct = (0..n).filter(|&i| head.predict(features.row(i)) == labels[i]).count();
    Ok((head, HeadReport { loss_curve, train_accuracy: correct as f64 / n as f64 }))
}
