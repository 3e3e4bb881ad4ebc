//! Siamese remapping network applied to frozen embeddings.
//!
//! Two backends share one parameter container: an attention block over
//! pseudo-tokens (the pooled vector reshaped into `segments` tokens) and a
//! residual MLP. Gradients are analytic; [`grad_check`] compares them with
//! central differences.

mod adamw;
mod attention;
mod checkpoint;
mod gradcheck;
mod lemma;
mod loss;
mod mlp;
mod ops;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adamw::{adamw_step, adamw_update, AdamWConfig, OptimizerState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{check_batch, grad_check, GradCheckReport};
pub use lemma::{lemma1_probe, random_close_pair, LinearScalar, Lemma1Probe, ScalarFunction, TwoLayerScalarNet};
pub use loss::{cosine_distance, triplet_loss, TripletGrad, NORM_EPS};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Attention,
    Mlp,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attention" => Ok(Backend::Attention),
            "mlp" => Ok(Backend::Mlp),
            other => Err(Error::InvalidArgument(format!("unknown remap backend `{other}`"))),
        }
    }
}

/// Architecture hyperparameters; the width `u` comes from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemapConfig {
    pub backend: Backend,
    pub heads: usize,
    /// Feed-forward width (attention) or hidden-layer width (mlp).
    pub hidden: usize,
    /// Pseudo-tokens per vector for the attention backend; must divide `u`.
    pub segments: usize,
    /// Hidden layers of the mlp backend.
    pub mlp_layers: usize,
}

impl Default for RemapConfig {
    fn default() -> Self {
        Self { backend: Backend::Attention, heads: 8, hidden: 768, segments: 8, mlp_layers: 1 }
    }
}

impl RemapConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::ShapeMismatch(m));
        if dim == 0 || self.hidden == 0 {
            return bad("dimension and hidden width must be positive".into());
        }
        match self.backend {
            Backend::Attention => {
                if self.segments == 0 || dim % self.segments != 0 {
                    return bad(format!("dimension {dim} is not divisible by {} segments", self.segments));
                }
                let width = dim / self.segments;
                if self.heads == 0 || width % self.heads != 0 {
                    return bad(format!("token width {width} is not divisible by {} heads", self.heads));
                }
            }
            Backend::Mlp => {
                if self.mlp_layers == 0 {
                    return bad("mlp needs at least one hidden layer".into());
                }
            }
        }
        Ok(())
    }
}

/// Dense parameter tensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn filled(shape: &[usize], v: T) -> Self {
        Self { shape: shape.to_vec(), data: vec![v; shape.iter().product()] }
    }

    fn uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: (0..n).map(|_| T::lit(rng.random_range(-bound..=bound))).collect() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Parameter shapes for `config` at width `dim`, in storage order.
pub fn layout(dim: usize, config: &RemapConfig) -> Result<Vec<(String, Vec<usize>)>> {
    config.validate(dim)?;
    let f = config.hidden;
    Ok(match config.backend {
        Backend::Attention => {
            let d = dim / config.segments;
            let h = config.heads;
            let dh = d / h;
            vec![
                ("attn.query".into(), vec![h, d, dh]),
                ("attn.key".into(), vec![h, d, dh]),
                ("attn.value".into(), vec![h, d, dh]),
                ("attn.output".into(), vec![h, dh, d]),
                ("attn.output_bias".into(), vec![d]),
                ("norm1.gain".into(), vec![d]),
                ("norm1.bias".into(), vec![d]),
                ("ffn.w1".into(), vec![d, f]),
                ("ffn.b1".into(), vec![f]),
                ("ffn.w2".into(), vec![f, d]),
                ("ffn.b2".into(), vec![d]),
                ("norm2.gain".into(), vec![d]),
                ("norm2.bias".into(), vec![d]),
            ]
        }
        Backend::Mlp => {
            let mut widths = vec![dim];
            widths.extend(std::iter::repeat_n(f, config.mlp_layers));
            widths.push(dim);
            widths
                .windows(2)
                .enumerate()
                .flat_map(|(l, w)| {
                    [(format!("mlp.{l}.weight"), vec![w[0], w[1]]), (format!("mlp.{l}.bias"), vec![w[1]])]
                })
                .collect()
        }
    })
}

/// Weights of the remapping network plus a version stamp that changes on
/// every optimizer step, so stale forward caches are detected.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapParams<T> {
    pub dim: usize,
    pub config: RemapConfig,
    pub tensors: Vec<Tensor<T>>,
    pub(crate) version: u64,
}

/// Gradient bundle with the same layout as [`RemapParams::tensors`].
pub type Gradients<T> = Vec<Tensor<T>>;

/// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, zero biases, unit
/// layer-norm gains.
pub fn init_params<T: Scalar>(dim: usize, config: &RemapConfig, seed: u64) -> Result<RemapParams<T>> {
    let shapes = layout(dim, config)?;
    let mut rng = seed::rng(seed);
    let tensors = shapes
        .iter()
        .map(|(name, shape)| {
            if name.ends_with("gain") {
                Tensor::filled(shape, T::one())
            } else if name.contains("bias") || name.starts_with("ffn.b") {
                Tensor::zeros(shape)
            } else {
                let fan_in = match config.backend {
                    // heads are concatenated: every projection sees a width-d token or a width-d concat
                    Backend::Attention if name == "attn.output" => shape[0] * shape[1],
                    Backend::Attention if shape.len() == 3 => shape[1],
                    _ => shape[0],
                };
                Tensor::uniform(shape, 1.0 / (fan_in as f64).sqrt(), &mut rng)
            }
        })
        .collect();
    Ok(RemapParams { dim, config: *config, tensors, version: 0 })
}

impl<T: Scalar> RemapParams<T> {
    pub fn from_tensors(dim: usize, config: RemapConfig, tensors: Vec<Tensor<T>>) -> Result<Self> {
        let shapes = layout(dim, &config)?;
        if shapes.len() != tensors.len() {
            return Err(Error::ShapeMismatch(format!("{} tensors, layout needs {}", tensors.len(), shapes.len())));
        }
        for ((name, shape), t) in shapes.iter().zip(&tensors) {
            if &t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::ShapeMismatch(format!("{name}: {:?} vs {:?}", t.shape, shape)));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue(format!("parameter {name}")));
            }
        }
        Ok(Self { dim, config, tensors, version: 0 })
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        self.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect()
    }

    pub fn names(&self) -> Vec<String> {
        layout(self.dim, &self.config).expect("validated").into_iter().map(|(n, _)| n).collect()
    }

    /// Multiply-accumulate count of one forward pass; depends only on the architecture.
    pub fn forward_flops(&self) -> usize {
        let u = self.dim;
        let f = self.config.hidden;
        match self.config.backend {
            Backend::Attention => {
                let s = self.config.segments;
                let d = u / s;
                let dh = d / self.config.heads;
                let h = self.config.heads;
                h * (3 * s * d * dh + 2 * s * s * dh + s * dh * d) + 2 * s * d * f
            }
            Backend::Mlp => {
                let mut widths = vec![u];
                widths.extend(std::iter::repeat_n(f, self.config.mlp_layers));
                widths.push(u);
                widths.windows(2).map(|w| w[0] * w[1]).sum()
            }
        }
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    version: u64,
    inner: CacheKind<T>,
}

#[derive(Debug, Clone)]
enum CacheKind<T> {
    Attention(attention::Cache<T>),
    Mlp(mlp::Cache<T>),
}

pub fn forward<T: Scalar>(params: &RemapParams<T>, x: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
    if x.len() != params.dim {
        return Err(Error::ShapeMismatch(format!("input of length {}, network width {}", x.len(), params.dim)));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("remap input".into()));
    }
    let (z, inner) = match params.config.backend {
        Backend::Attention => {
            let (z, c) = attention::forward(params, x);
            (z, CacheKind::Attention(c))
        }
        Backend::Mlp => {
            let (z, c) = mlp::forward(params, x);
            (z, CacheKind::Mlp(c))
        }
    };
    Ok((z, ForwardCache { version: params.version, inner }))
}

/// Forward pass for every row, discarding caches.
pub fn remap_matrix<T: Scalar>(params: &RemapParams<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(x.rows(), params.dim);
    for i in 0..x.rows() {
        let (z, _) = forward(params, x.row(i))?;
        out.row_mut(i).copy_from_slice(&z);
    }
    Ok(out)
}

/// Pushes `dz` (gradient w.r.t. the output) through one cached forward pass,
/// accumulating into `grads`.
pub fn backward_output<T: Scalar>(
    params: &RemapParams<T>,
    cache: &ForwardCache<T>,
    dz: &[T],
    grads: &mut Gradients<T>,
) -> Result<()> {
    if cache.version != params.version {
        return Err(Error::ShapeMismatch("forward cache was produced by different parameters".into()));
    }
    if grads.len() != params.tensors.len() || dz.len() != params.dim {
        return Err(Error::ShapeMismatch("gradient bundle does not match parameters".into()));
    }
    match (&cache.inner, params.config.backend) {
        (CacheKind::Attention(c), Backend::Attention) => attention::backward(params, c, dz, grads),
        (CacheKind::Mlp(c), Backend::Mlp) => mlp::backward(params, c, dz, grads),
        _ => return Err(Error::ShapeMismatch("cache backend differs from parameters".into())),
    }
    Ok(())
}

/// Exact gradient of one triplet's hinge loss through the shared network;
/// returns the loss. Inactive hinges add nothing.
pub fn backward<T: Scalar>(
    params: &RemapParams<T>,
    caches: [&ForwardCache<T>; 3],
    outputs: [&[T]; 3],
    beta: T,
    grads: &mut Gradients<T>,
) -> Result<T> {
    let g = triplet_loss(outputs[0], outputs[1], outputs[2], beta)?;
    if g.loss > T::zero() {
        backward_output(params, caches[0], &g.d_anchor, grads)?;
        backward_output(params, caches[1], &g.d_positive, grads)?;
        backward_output(params, caches[2], &g.d_negative, grads)?;
    }
    Ok(g.loss)
}

/// Summed triplet loss and its gradient over a batch of `(anchor, positive, negative)` inputs.
pub fn batch_loss_and_grad<T: Scalar>(
    params: &RemapParams<T>,
    batch: &[[&[T]; 3]],
    beta: T,
) -> Result<(T, Gradients<T>)> {
    let mut grads = params.zero_gradients();
    let mut total = T::zero();
    for triple in batch {
        let (za, ca) = forward(params, triple[0])?;
        let (zp, cp) = forward(params, triple[1])?;
        let (zn, cn) = forward(params, triple[2])?;
        total += backward(params, [&ca, &cp, &cn], [&za, &zp, &zn], beta, &mut grads)?;
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteValue("triplet loss".into()));
    }
    Ok((total, grads))
}

/// Summed loss only.
pub fn batch_loss<T: Scalar>(params: &RemapParams<T>, batch: &[[&[T]; 3]], beta: T) -> Result<T> {
    let mut total = T::zero();
    for triple in batch {
        let za = forward(params, triple[0])?.0;
        let zp = forward(params, triple[1])?.0;
        let zn = forward(params, triple[2])?.0;
        total += triplet_loss(&za, &zp, &zn, beta)?.loss;
    }
    Ok(total)
}
