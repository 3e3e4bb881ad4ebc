use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{squared_distance, Scalar};
use crate::seed;

/// `min(100, n / 10)`, at least 1.
pub fn default_probes(n: usize) -> usize {
    (n / 10).clamp(1, 100)
}

/// Hopkins statistic `H = sum(w) / (sum(u) + sum(w))`.
///
/// `w` are nearest-neighbour distances from `m` sampled records to the other
/// records, `u` the distances from `m` uniform probes in the bounding box to
/// the nearest record. Identical points give `H = 0`.
pub fn hopkins<T: Scalar>(x: &Matrix<T>, m: usize, seed: u64) -> Result<T> {
    let n = x.rows();
    if m == 0 {
        return Err(Error::InvalidArgument("hopkins needs at least one probe".into()));
    }
    if n < 2 * m {
        return Err(Error::InvalidArgument(format!("hopkins with m = {m} needs n >= {}, got {n}", 2 * m)));
    }
    let u = x.cols();
    let mut lo = x.row(0).to_vec();
    let mut hi = lo.clone();
    for r in x.iter_rows() {
        for j in 0..u {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    if lo.iter().zip(&hi).all(|(a, b)| a == b) {
        return Ok(T::zero());
    }

    let mut rng = seed::rng(seed);
    let picked = sample(&mut rng, n, m);
    let mut w_sum = T::zero();
    for i in picked.iter() {
        let xi = x.row(i);
        let best = (0..n)
            .filter(|&j| j != i)
            .map(|j| squared_distance(xi, x.row(j)))
            .fold(T::infinity(), T::min);
        w_sum += best.sqrt();
    }
    let mut u_sum = T::zero();
    let mut probe = vec![T::zero(); u];
    for _ in 0..m {
        for j in 0..u {
            probe[j] = lo[j] + T::lit(rng.random::<f64>()) * (hi[j] - lo[j]);
        }
        let best = x.iter_rows().map(|r| squared_distance(&probe, r)).fold(T::infinity(), T::min);
        u_sum += best.sqrt();
    }
    let denom = u_sum + w_sum;
    Ok(if denom > T::zero() { w_sum / denom } else { T::zero() })
}
