use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{cosine, Scalar};

/// Mean cosine similarity between class centroids over all unordered label pairs.
pub fn centroid_cos_separation<T: Scalar>(x: &Matrix<T>, labels: &[i32]) -> Result<T> {
    if x.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} vectors for {} labels", x.rows(), labels.len())));
    }
    let mut sums: BTreeMap<i32, (Vec<T>, usize)> = BTreeMap::new();
    for (r, &l) in x.iter_rows().zip(labels) {
        let entry = sums.entry(l).or_insert_with(|| (vec![T::zero(); x.cols()], 0));
        entry.0.iter_mut().zip(r).for_each(|(a, &v)| *a += v);
        entry.1 += 1;
    }
    if sums.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 labels, found {}", sums.len())));
    }
    let centroids: Vec<(i32, Vec<T>)> = sums
        .into_iter()
        .map(|(l, (s, c))| {
            let c = T::from_usize_lossy(c);
            (l, s.into_iter().map(|v| v / c).collect())
        })
        .collect();
    let mut total = T::zero();
    let mut count = 0usize;
    for i in 0..centroids.len() {
        for j in (i + 1)..centroids.len() {
            let c = cosine(&centroids[i].1, &centroids[j].1).ok_or_else(|| {
                let zero = if crate::scalar::norm(&centroids[i].1) == T::zero() { i } else { j };
                Error::InvalidArgument(format!("centroid of label {} is the zero vector", centroids[zero].0))
            })?;
            total += c;
            count += 1;
        }
    }
    Ok(total / T::from_usize_lossy(count))
}

/// Separation before minus separation after; positive when class centroids
/// moved apart in angle.
pub fn delta_theta<T: Scalar>(before: &Matrix<T>, after: &Matrix<T>, labels: &[i32]) -> Result<T> {
    if before.rows() != after.rows() {
        return Err(Error::ShapeMismatch("before and after spaces cover different records".into()));
    }
    Ok(centroid_cos_separation(before, labels)? - centroid_cos_separation(after, labels)?)
}
