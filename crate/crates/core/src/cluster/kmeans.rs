use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{squared_distance, Scalar};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { k: 8, max_iter: 300, tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansOutcome<T> {
    pub assignment: ClusterAssignment,
    pub centers: Matrix<T>,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> KMeansOutcome<T> {
    pub fn inertia(&self) -> T {
        self.inertia_history.last().copied().unwrap_or_else(T::zero)
    }
}

fn nearest<T: Scalar>(x: &[T], centers: &Matrix<T>) -> (usize, T) {
    let mut best = (0, T::infinity());
    for c in 0..centers.rows() {
        let d = squared_distance(x, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init<T: Scalar>(x: &Matrix<T>, k: usize, rng: &mut impl Rng) -> Matrix<T> {
    let n = x.rows();
    let mut centers = Matrix::zeros(k, x.cols());
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centers.row_mut(0).copy_from_slice(x.row(first));
    let mut d2: Vec<T> = (0..n).map(|i| squared_distance(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let total: T = d2.iter().copied().sum();
        let pick = if total > T::zero() {
            let target = T::lit(rng.random::<f64>()) * total;
            let mut run = T::zero();
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                run += d;
                if d > T::zero() && run >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| d2[i] > T::zero()).expect("positive mass"))
        } else {
            // every remaining point coincides with a center
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), x.row(pick)));
        }
    }
    centers
}

/// k-means++ seeding followed by Lloyd iterations. Clusters that empty out are
/// re-seeded from the point farthest from its center.
pub fn kmeans<T: Scalar>(x: &Matrix<T>, params: &KMeansParams, seed: u64) -> Result<KMeansOutcome<T>> {
    let n = x.rows();
    let k = params.k;
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in [2, {n}]")));
    }
    let mut rng = seed::rng(seed);
    let mut centers = plus_plus_init(x, k, &mut rng);
    let tol = T::lit(params.tol);
    let mut labels = vec![0usize; n];
    let mut dists = vec![T::zero(); n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let assign = |centers: &Matrix<T>, labels: &mut [usize], dists: &mut [T]| {
        for i in 0..n {
            let (c, d) = nearest(x.row(i), centers);
            labels[i] = c;
            dists[i] = d;
        }
    };

    while iterations < params.max_iter {
        iterations += 1;
        assign(&centers, &mut labels, &mut dists);
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&c| counts[c] += 1);
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap_or(std::cmp::Ordering::Equal))
                .expect("k <= n leaves a shared cluster");
            counts[labels[far]] -= 1;
            counts[empty] = 1;
            labels[far] = empty;
            dists[far] = T::zero();
            centers.row_mut(empty).copy_from_slice(x.row(far));
        }
        history.push(dists.iter().copied().sum());

        let mut next = Matrix::zeros(k, x.cols());
        for (i, &c) in labels.iter().enumerate() {
            for (a, &v) in next.row_mut(c).iter_mut().zip(x.row(i)) {
                *a += v;
            }
        }
        let mut shift = T::zero();
        for c in 0..k {
            let cnt = T::from_usize_lossy(counts[c]);
            next.row_mut(c).iter_mut().for_each(|v| *v /= cnt);
            shift = shift.max(squared_distance(next.row(c), centers.row(c)).sqrt());
        }
        centers = next;
        if shift < tol {
            converged = true;
            break;
        }
    }
    // final assignment against the final centers
    assign(&centers, &mut labels, &mut dists);
    let final_inertia: T = dists.iter().copied().sum();
    if history.last().is_none_or(|&last| final_inertia <= last) {
        history.push(final_inertia);
    }
    let assignment = ClusterAssignment::from_raw_labels(&labels);
    Ok(KMeansOutcome { assignment, centers, inertia_history: history, iterations, converged })
}
