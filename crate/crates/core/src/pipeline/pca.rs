use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::{dot, norm, Scalar};
use crate::seed;

/// Widths at or below this use a full Jacobi eigendecomposition.
pub const DENSE_EIGEN_MAX_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca<T> {
    pub mean: Vec<T>,
    /// `k x u`, orthonormal rows.
    pub components: Matrix<T>,
    pub coords: Matrix<T>,
    /// Share of total variance per component, non-increasing, padded with 0 past the rank.
    pub explained_variance_ratio: Vec<T>,
}

fn covariance<T: Scalar>(x: &Matrix<T>, mean: &[T]) -> Matrix<T> {
    let (n, u) = (x.rows(), x.cols());
    let mut c = Matrix::zeros(u, u);
    let mut centered = vec![T::zero(); u];
    for r in x.iter_rows() {
        for j in 0..u {
            centered[j] = r[j] - mean[j];
        }
        for i in 0..u {
            let ci = centered[i];
            for j in i..u {
                c[(i, j)] += ci * centered[j];
            }
        }
    }
    let denom = T::from_usize_lossy(n - 1);
    for i in 0..u {
        for j in i..u {
            let v = c[(i, j)] / denom;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Top eigenpairs by power iteration with deflation.
fn power_top_k<T: Scalar>(c: &Matrix<T>, k: usize, seed: u64) -> (Vec<T>, Vec<Vec<T>>) {
    let u = c.rows();
    let mut rng = seed::rng(seed);
    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<T>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v: Vec<T> = (0..u).map(|_| T::lit(rng.sample(StandardNormal))).collect();
        let mut lambda = T::zero();
        for _ in 0..1000 {
            for q in &vectors {
                let p = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, &b)| *a -= p * b);
            }
            let mut w: Vec<T> = (0..u).map(|i| dot(c.row(i), &v)).collect();
            for (q, &l) in vectors.iter().zip(&values) {
                let p = dot(&v, q) * l;
                w.iter_mut().zip(q).for_each(|(a, &b)| *a -= p * b);
            }
            let nw = norm(&w);
            if nw == T::zero() {
                lambda = T::zero();
                break;
            }
            w.iter_mut().for_each(|a| *a /= nw);
            let change = w.iter().zip(&v).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
            v = w;
            lambda = nw;
            if change < T::lit(1e-10) {
                break;
            }
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|a| *a /= nv);
        values.push(lambda);
        vectors.push(v);
    }
    (values, vectors)
}

/// Mean-centres `x` and projects it on the top `k` principal directions.
pub fn pca_project<T: Scalar>(x: &Matrix<T>, k: usize) -> Result<Pca<T>> {
    let (n, u) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidArgument("pca needs at least two rows".into()));
    }
    if k == 0 || k > u {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={u}")));
    }
    let mean = x.column_means();
    let c = covariance(x, &mean);
    let total: T = (0..u).map(|i| c[(i, i)]).sum();
    let (values, vectors) = if u <= DENSE_EIGEN_MAX_DIM {
        let e = symmetric_eigen(&c)?;
        let vecs = (0..k).map(|j| (0..u).map(|i| e.vectors[(i, j)]).collect()).collect();
        (e.values[..k].to_vec(), vecs)
    } else {
        power_top_k(&c, k, 0)
    };
    let rows: Vec<Vec<T>> = vectors;
    let components = Matrix::from_rows(&rows)?;
    let mut coords = Matrix::zeros(n, k);
    let mut centered = vec![T::zero(); u];
    for r in 0..n {
        for j in 0..u {
            centered[j] = x.row(r)[j] - mean[j];
        }
        for (c_, comp) in rows.iter().enumerate() {
            coords[(r, c_)] = dot(&centered, comp);
        }
    }
    let explained_variance_ratio = values
        .iter()
        .map(|&v| if total > T::zero() { (v.max(T::zero()) / total).min(T::one()) } else { T::zero() })
        .collect();
    Ok(Pca { mean, components, coords, explained_variance_ratio })
}
