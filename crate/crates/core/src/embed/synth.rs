use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{EmbeddingDataset, EmbeddingRecord};
use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::seed;

/// One Gaussian blob of the planted-bias generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    /// Center coordinates are drawn uniformly from `[-dispersion, dispersion]`.
    pub dispersion: f64,
    pub std_dev: f64,
    pub size: usize,
    /// Probability a point carries the blob's majority label; 0.5 is balanced
    /// for two labels and 1.0 is label-pure.
    pub skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub label_count: usize,
    pub blobs: Vec<BlobSpec>,
    /// Length of a per-label offset added to every point of that label.
    /// Zero gives labels that carry no signal beyond blob membership.
    #[serde(default)]
    pub label_signal: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// `count` identical blobs.
    pub fn uniform_blobs(dim: usize, label_count: usize, count: usize, blob: BlobSpec, seed: u64) -> Self {
        Self { dim, label_count, blobs: vec![blob; count], label_signal: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.label_count < 2 {
            return bad(format!("label_count {} < 2", self.label_count));
        }
        if self.blobs.is_empty() {
            return bad("at least one blob is required".into());
        }
        if !(self.label_signal.is_finite() && self.label_signal >= 0.0) {
            return bad("label_signal must be finite and non-negative".into());
        }
        for (i, b) in self.blobs.iter().enumerate() {
            if b.size < 2 {
                return bad(format!("blob {i}: size {} < 2", b.size));
            }
            if !(0.5..=1.0).contains(&b.skew) {
                return bad(format!("blob {i}: skew {} outside [0.5, 1.0]", b.skew));
            }
            if !(b.dispersion.is_finite() && b.dispersion >= 0.0 && b.std_dev.is_finite() && b.std_dev >= 0.0) {
                return bad(format!("blob {i}: dispersion and std_dev must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Majority label of blob `i`: blobs cycle through the label set.
    pub fn majority_label(&self, blob: usize) -> i32 {
        (blob % self.label_count) as i32
    }
}

/// Draws the planted-bias dataset. Records are emitted blob by blob with ids
/// `s000000, s000001, ...`; the returned assignment is the generating blob.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(EmbeddingDataset, ClusterAssignment)> {
    spec.validate()?;
    let u = spec.dim;
    let mut rng = seed::rng(seed::derive(spec.seed, "synthetic"));

    let mut direction_rng = seed::rng(seed::derive(spec.seed, "synthetic-label-directions"));
    let label_offsets: Vec<Vec<f64>> = (0..spec.label_count)
        .map(|_| {
            let v: Vec<f64> = (0..u).map(|_| direction_rng.sample(StandardNormal)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| spec.label_signal * x / n).collect()
        })
        .collect();

    let total: usize = spec.blobs.iter().map(|b| b.size).sum();
    let mut records = Vec::with_capacity(total);
    let mut truth = Vec::with_capacity(total);
    for (b, blob) in spec.blobs.iter().enumerate() {
        let center: Vec<f64> = (0..u).map(|_| rng.random_range(-1.0..=1.0) * blob.dispersion).collect();
        let majority = spec.majority_label(b);
        for _ in 0..blob.size {
            let label = if rng.random::<f64>() < blob.skew {
                majority
            } else {
                // uniform over the other labels
                let k = rng.random_range(0..spec.label_count - 1) as i32;
                if k >= majority {
                    k + 1
                } else {
                    k
                }
            };
            let offset = &label_offsets[label as usize];
            let vector = center
                .iter()
                .zip(offset)
                .map(|(&c, &o)| {
                    let z: f64 = rng.sample(StandardNormal);
                    (c + o + blob.std_dev * z) as f32
                })
                .collect();
            records.push(EmbeddingRecord { id: format!("s{:06}", records.len()), vector, label, tokens: None });
            truth.push(b);
        }
    }
    let labels = (0..spec.label_count as i32).collect();
    let dataset = EmbeddingDataset::new(labels, records)?;
    Ok((dataset, ClusterAssignment::new(truth)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(skew: f64, size: usize) -> BlobSpec {
        BlobSpec { dispersion: 1.0, std_dev: 0.05, size, skew }
    }

    #[test]
    fn skew_one_gives_pure_blobs() {
        let spec = SyntheticSpec::uniform_blobs(8, 2, 2, blob(1.0, 100), 3);
        let (ds, truth) = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.len(), 200);
        for (r, &c) in ds.records().iter().zip(truth.cluster_of()) {
            assert_eq!(r.label, spec.majority_label(c));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec::uniform_blobs(4, 3, 3, blob(0.7, 20), 11);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let other = SyntheticSpec { seed: 12, ..spec };
        assert_ne!(generate_synthetic(&other).unwrap().0, a.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = SyntheticSpec::uniform_blobs(4, 2, 1, blob(0.4, 20), 0);
        assert!(generate_synthetic(&spec).is_err());
        spec.blobs[0] = blob(0.6, 1);
        assert!(generate_synthetic(&spec).is_err());
        spec.blobs[0] = blob(0.6, 2);
        spec.label_count = 1;
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn label_signal_shifts_label_means() {
        let mut spec = SyntheticSpec::uniform_blobs(16, 2, 1, BlobSpec { std_dev: 0.01, ..blob(0.5, 400) }, 5);
        spec.label_signal = 0.5;
        let (ds, _) = generate_synthetic(&spec).unwrap();
        let mut means = [vec![0.0f64; 16], vec![0.0f64; 16]];
        let mut counts = [0usize; 2];
        for r in ds.records() {
            counts[r.label as usize] += 1;
            for (m, &v) in means[r.label as usize].iter_mut().zip(&r.vector) {
                *m += f64::from(v);
            }
        }
        let gap: f64 = (0..16)
            .map(|j| means[0][j] / counts[0] as f64 - means[1][j] / counts[1] as f64)
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt();
        // two independent unit directions scaled by 0.5 sit roughly 0.5*sqrt(2) apart
        assert!(gap > 0.3 && gap < 1.1, "gap {gap}");
    }
}
