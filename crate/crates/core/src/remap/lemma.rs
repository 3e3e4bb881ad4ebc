//! Empirical check of the first-order-plus-curvature bound on
//! `|f(x) - f(x')|` for scalar networks and close inputs.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_spectral_norm, Matrix};
use crate::scalar::{norm, Scalar};

/// Points on the segment where the Hessian norm is sampled.
pub const SEGMENT_POINTS: usize = 20;
/// Inflation applied to the sampled Hessian norm.
pub const HESSIAN_SAFETY: f64 = 1.5;

pub trait ScalarFunction<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;

    /// Central differences of the gradient, symmetrized.
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let u = self.dim();
        let h = T::lit(1e-5);
        let mut out = Matrix::zeros(u, u);
        let mut probe = x.to_vec();
        for j in 0..u {
            probe[j] = x[j] + h;
            let up = self.gradient(&probe);
            probe[j] = x[j] - h;
            let down = self.gradient(&probe);
            probe[j] = x[j];
            for i in 0..u {
                out[(i, j)] = (up[i] - down[i]) / (h + h);
            }
        }
        for i in 0..u {
            for j in i + 1..u {
                let m = (out[(i, j)] + out[(j, i)]) * T::lit(0.5);
                out[(i, j)] = m;
                out[(j, i)] = m;
            }
        }
        out
    }
}

/// `f(x) = w.x + b`
#[derive(Debug, Clone)]
pub struct LinearScalar<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> ScalarFunction<T> for LinearScalar<T> {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.weights, x) + self.bias
    }

    fn gradient(&self, _x: &[T]) -> Vec<T> {
        self.weights.clone()
    }

    fn hessian(&self, _x: &[T]) -> Matrix<T> {
        Matrix::zeros(self.dim(), self.dim())
    }
}

/// `f(x) = v . tanh(W x + c) + b`, with an exact Hessian.
#[derive(Debug, Clone)]
pub struct TwoLayerScalarNet<T> {
    /// `hidden x u`
    pub w: Matrix<T>,
    pub c: Vec<T>,
    pub v: Vec<T>,
    pub b: T,
}

impl<T: Scalar> TwoLayerScalarNet<T> {
    pub fn random(dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut normal = |scale: f64| T::lit(scale * rng.sample::<f64, _>(StandardNormal));
        let wscale = 1.0 / (dim as f64).sqrt();
        let w = Matrix::from_vec(hidden, dim, (0..hidden * dim).map(|_| normal(wscale)).collect())
            .expect("sized");
        let c = (0..hidden).map(|_| normal(0.5)).collect();
        let v = (0..hidden).map(|_| normal(1.0 / (hidden as f64).sqrt())).collect();
        Self { w, c, v, b: normal(0.1) }
    }

    fn activations(&self, x: &[T]) -> Vec<T> {
        (0..self.w.rows()).map(|k| (crate::scalar::dot(self.w.row(k), x) + self.c[k]).tanh()).collect()
    }
}

impl<T: Scalar> ScalarFunction<T> for TwoLayerScalarNet<T> {
    fn dim(&self) -> usize {
        self.w.cols()
    }

    fn value(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.v, &self.activations(x)) + self.b
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let t = self.activations(x);
        let mut g = vec![T::zero(); self.dim()];
        for (k, &tk) in t.iter().enumerate() {
            let s = self.v[k] * (T::one() - tk * tk);
            for (gi, &wi) in g.iter_mut().zip(self.w.row(k)) {
                *gi += s * wi;
            }
        }
        g
    }

    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let u = self.dim();
        let t = self.activations(x);
        let mut h = Matrix::zeros(u, u);
        for (k, &tk) in t.iter().enumerate() {
            // d2 tanh = -2 tanh (1 - tanh^2)
            let s = self.v[k] * T::lit(-2.0) * tk * (T::one() - tk * tk);
            let row = self.w.row(k);
            for i in 0..u {
                for j in 0..u {
                    h[(i, j)] += s * row[i] * row[j];
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Probe {
    pub lhs: f64,
    pub gradient_term: f64,
    pub hessian_term: f64,
    pub hessian_bound: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares `|f(x) - f(x')|` with `sqrt(u) alpha |grad f(x)| + M alpha / 2`.
pub fn lemma1_probe<T: Scalar, F: ScalarFunction<T>>(f: &F, x: &[T], x_prime: &[T], alpha: T) -> Result<Lemma1Probe> {
    let u = f.dim();
    if x.len() != u || x_prime.len() != u {
        return Err(Error::ShapeMismatch(format!("inputs must have length {u}")));
    }
    let diff: Vec<T> = x_prime.iter().zip(x).map(|(&b, &a)| b - a).collect();
    let dist = norm(&diff);
    if !(dist < alpha) {
        return Err(Error::InvalidArgument(format!(
            "inputs are {} apart, not closer than alpha = {}",
            dist.to_f64_lossy(),
            alpha.to_f64_lossy()
        )));
    }
    let mut m = T::zero();
    let mut point = vec![T::zero(); u];
    for k in 0..SEGMENT_POINTS {
        let t = T::from_usize_lossy(k) / T::from_usize_lossy(SEGMENT_POINTS - 1);
        for i in 0..u {
            point[i] = x[i] + t * diff[i];
        }
        m = m.max(symmetric_spectral_norm(&f.hessian(&point))?);
    }
    let m = m * T::lit(HESSIAN_SAFETY);
    let lhs = (f.value(x) - f.value(x_prime)).abs();
    let gradient_term = T::from_usize_lossy(u).sqrt() * alpha * norm(&f.gradient(x));
    let hessian_term = T::lit(0.5) * m * alpha;
    let bound = gradient_term + hessian_term;
    Ok(Lemma1Probe {
        lhs: lhs.to_f64_lossy(),
        gradient_term: gradient_term.to_f64_lossy(),
        hessian_term: hessian_term.to_f64_lossy(),
        hessian_bound: m.to_f64_lossy(),
        bound: bound.to_f64_lossy(),
        holds: lhs <= bound,
    })
}

/// A Gaussian point and a partner strictly within `alpha` of it.
pub fn random_close_pair(dim: usize, alpha: f64, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm(&dir);
    let radius = alpha * rng.random_range(0.0..0.999);
    dir.iter_mut().for_each(|d| *d *= radius / n);
    let xp = x.iter().zip(&dir).map(|(a, d)| a + d).collect();
    (x, xp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn linear_model_bound_is_cauchy_schwarz() {
        let f = LinearScalar { weights: vec![1.0f64, -2.0, 0.5], bias: 0.3 };
        let p = lemma1_probe(&f, &[0.0, 0.0, 0.0], &[0.05, 0.05, -0.05], 0.1).unwrap();
        assert_eq!(p.hessian_term, 0.0);
        assert!(p.holds);
        assert!(p.lhs <= 0.1 * norm(&f.weights));
    }

    #[test]
    fn identical_points_hold() {
        let f = TwoLayerScalarNet::<f64>::random(4, 6, &mut seed::rng(1));
        let x = [0.1, 0.2, -0.3, 0.4];
        let p = lemma1_probe(&f, &x, &x, 0.1).unwrap();
        assert_eq!(p.lhs, 0.0);
        assert!(p.holds);
    }

    #[test]
    fn far_pair_is_rejected() {
        let f = LinearScalar { weights: vec![1.0f64, 1.0], bias: 0.0 };
        assert!(lemma1_probe(&f, &[0.0, 0.0], &[1.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn exact_hessian_matches_finite_differences() {
        struct Fd<'a>(&'a TwoLayerScalarNet<f64>);
        impl ScalarFunction<f64> for Fd<'_> {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn value(&self, x: &[f64]) -> f64 {
                self.0.value(x)
            }
            fn gradient(&self, x: &[f64]) -> Vec<f64> {
                self.0.gradient(x)
            }
        }
        let f = TwoLayerScalarNet::<f64>::random(5, 7, &mut seed::rng(2));
        let x = [0.3, -0.1, 0.7, 0.2, -0.4];
        let exact = f.hessian(&x);
        let fd = Fd(&f).hessian(&x);
        for i in 0..5 {
            for j in 0..5 {
                assert!((exact[(i, j)] - fd[(i, j)]).abs() < 1e-7);
            }
        }
    }
}
