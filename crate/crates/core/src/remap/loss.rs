//! Cosine triplet loss `max(0, d(a,p) - d(a,n) + beta)` with `d = 1 - cos`.

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// Added to each norm in the cosine denominator.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TripletGrad<T> {
    pub loss: T,
    pub d_positive_distance: T,
    pub d_negative_distance: T,
    pub d_anchor: Vec<T>,
    pub d_positive: Vec<T>,
    pub d_negative: Vec<T>,
}

/// `1 - x.y / ((|x| + eps)(|y| + eps))`
pub fn cosine_distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    let eps = T::lit(NORM_EPS);
    T::one() - dot(x, y) / ((norm(x) + eps) * (norm(y) + eps))
}

/// Gradients of the cosine distance with respect to both arguments.
fn distance_grad<T: Scalar>(x: &[T], y: &[T]) -> (Vec<T>, Vec<T>) {
    let eps = T::lit(NORM_EPS);
    let (nx, ny) = (norm(x), norm(y));
    let (a, b) = (nx + eps, ny + eps);
    let xy = dot(x, y);
    let part = |u: &[T], v: &[T], nu: T, au: T, bv: T| -> Vec<T> {
        u.iter()
            .zip(v)
            .map(|(&ui, &vi)| -(vi / (au * bv) - xy / (au * au * bv) * ui / nu))
            .collect()
    };
    (part(x, y, nx, a, b), part(y, x, ny, b, a))
}

pub fn triplet_loss<T: Scalar>(a: &[T], p: &[T], n: &[T], beta: T) -> Result<TripletGrad<T>> {
    if a.len() != p.len() || a.len() != n.len() {
        return Err(Error::ShapeMismatch(format!("triplet lengths {}, {}, {}", a.len(), p.len(), n.len())));
    }
    for (i, v) in [a, p, n].iter().enumerate() {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue("triplet input".into()));
        }
        if norm(v) == T::zero() {
            return Err(Error::ZeroVector(i));
        }
    }
    let dap = cosine_distance(a, p);
    let dan = cosine_distance(a, n);
    let raw = dap - dan + beta;
    let zeros = || vec![T::zero(); a.len()];
    if raw <= T::zero() {
        return Ok(TripletGrad {
            loss: T::zero(),
            d_positive_distance: dap,
            d_negative_distance: dan,
            d_anchor: zeros(),
            d_positive: zeros(),
            d_negative: zeros(),
        });
    }
    let (ga_p, gp) = distance_grad(a, p);
    let (ga_n, gn) = distance_grad(a, n);
    Ok(TripletGrad {
        loss: raw,
        d_positive_distance: dap,
        d_negative_distance: dan,
        d_anchor: ga_p.iter().zip(&ga_n).map(|(&x, &y)| x - y).collect(),
        d_positive: gp,
        d_negative: gn.into_iter().map(|v| -v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_negative_is_penalized_only_with_margin() {
        let a = [1.0f64, 0.0];
        let p = [1.0f64, 0.0];
        let n = [0.0f64, 1.0];
        let g = triplet_loss(&a, &p, &n, 0.2).unwrap();
        assert_eq!(g.loss, 0.0);
        let g = triplet_loss(&a, &n, &p, 0.2).unwrap();
        assert!((g.loss - 1.2).abs() < 1e-9);
    }

    #[test]
    fn zero_vector_is_an_error() {
        assert!(triplet_loss(&[0.0f64, 0.0], &[1.0, 0.0], &[0.0, 1.0], 0.2).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let a = [0.3f64, -1.2, 0.8];
        let p = [-0.5f64, 0.4, 1.1];
        let n = [0.9f64, -0.7, 0.2];
        let g = triplet_loss(&a, &p, &n, 0.5).unwrap();
        assert!(g.loss > 0.0);
        let h = 1e-6;
        let check = |which: usize, grad: &[f64]| {
            for i in 0..3 {
                let mut v = [a, p, n];
                v[which][i] += h;
                let up = triplet_loss(&v[0], &v[1], &v[2], 0.5).unwrap().loss;
                v[which][i] -= 2.0 * h;
                let down = triplet_loss(&v[0], &v[1], &v[2], 0.5).unwrap().loss;
                assert!(((up - down) / (2.0 * h) - grad[i]).abs() < 1e-7);
            }
        };
        check(0, &g.d_anchor);
        check(1, &g.d_positive);
        check(2, &g.d_negative);
    }
}
