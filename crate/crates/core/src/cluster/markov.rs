use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Column-stochastic transition matrix: entry `(i, j)` is the probability of
/// stepping from record `j` to record `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix<T> {
    m: Matrix<T>,
}

impl<T: Scalar> MarkovMatrix<T> {
    /// Wraps a matrix after checking non-negativity and unit column sums (1e-9).
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::ShapeMismatch(format!("{}x{} Markov matrix", m.rows(), m.cols())));
        }
        let n = m.rows();
        let tol = T::lit(1e-9);
        for j in 0..n {
            let mut sum = T::zero();
            for i in 0..n {
                let v = m[(i, j)];
                if !(v >= T::zero()) {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is negative or NaN")));
                }
                sum += v;
            }
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidArgument(format!("column {j} sums to {sum}")));
            }
        }
        Ok(Self { m })
    }

    /// Normalizes every column of a non-negative weight matrix.
    pub fn from_weights(mut w: Matrix<T>) -> Result<Self> {
        let n = w.rows();
        for j in 0..n {
            let sum = (0..n).fold(T::zero(), |acc, i| acc + w[(i, j)]);
            if sum <= T::zero() {
                return Err(Error::EmptyColumn(j));
            }
            for i in 0..n {
                w[(i, j)] /= sum;
            }
        }
        Self::new(w)
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.m
    }
}

/// Clamped cosine similarity between distinct records, `self_loop` on the diagonal, optionally
/// keeping only the `k` largest entries of each column, then column-normalized.
pub fn build_markov_matrix<T: Scalar>(
    x: &Matrix<T>,
    sparsify_top_k: Option<usize>,
    self_loop: T,
) -> Result<MarkovMatrix<T>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 vectors, got {n}")));
    }
    if !(self_loop >= T::zero()) {
        return Err(Error::InvalidArgument("self_loop must be non-negative".into()));
    }
    if sparsify_top_k == Some(0) {
        return Err(Error::InvalidArgument("sparsify_top_k must be at least 1".into()));
    }
    let mut unit = x.clone();
    for i in 0..n {
        let row = unit.row_mut(i);
        let norm = crate::scalar::norm(row);
        if norm == T::zero() || !norm.is_finite() {
            return Err(Error::ZeroVector(i));
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = self_loop;
        for j in (i + 1)..n {
            let c = crate::scalar::dot(unit.row(i), unit.row(j)).max(T::zero());
            s[(i, j)] = c;
            s[(j, i)] = c;
        }
    }
    if let Some(k) = sparsify_top_k.filter(|&k| k < n) {
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for j in 0..n {
            order.clear();
            order.extend(0..n);
            // stable: ties keep the lower row index
            order.sort_by(|&a, &b| s[(b, j)].partial_cmp(&s[(a, j)]).unwrap_or(std::cmp::Ordering::Equal));
            for &i in &order[k..] {
                s[(i, j)] = T::zero();
            }
        }
    }
    MarkovMatrix::from_weights(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_vectors_split_mass_evenly() {
        let x = Matrix::from_rows(&[[1.0f64, 2.0], [1.0, 2.0]]).unwrap();
        let m = build_markov_matrix(&x, None, 1.0).unwrap();
        for v in m.matrix().as_slice() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn orthogonal_vectors_give_identity() {
        let x = Matrix::from_rows(&[[1.0f64, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]).unwrap();
        let m = build_markov_matrix(&x, None, 1.0).unwrap();
        assert_eq!(m.matrix(), &Matrix::identity(3));
    }

    #[test]
    fn negative_cosines_are_clamped() {
        let x = Matrix::from_rows(&[[1.0f64, 0.0], [-1.0, 0.0]]).unwrap();
        let m = build_markov_matrix(&x, None, 1.0).unwrap();
        assert_eq!(m.matrix(), &Matrix::identity(2));
        // without a self-loop the columns have no mass left
        assert!(matches!(build_markov_matrix(&x, None, 0.0), Err(Error::EmptyColumn(0))));
    }

    #[test]
    fn zero_vector_is_rejected() {
        let x = Matrix::from_rows(&[[1.0f64, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(build_markov_matrix(&x, None, 1.0), Err(Error::ZeroVector(1))));
    }

    #[test]
    fn top_k_keeps_k_entries_per_column() {
        let x = Matrix::from_rows(&[[1.0f64, 0.1], [1.0, 0.2], [1.0, 0.3], [1.0, 0.9]]).unwrap();
        let m = build_markov_matrix(&x, Some(2), 1.0).unwrap();
        for j in 0..4 {
            let nnz = (0..4).filter(|&i| m.matrix()[(i, j)] > 0.0).count();
            assert_eq!(nnz, 2);
            assert!(m.matrix()[(j, j)] > 0.0);
        }
    }
}
