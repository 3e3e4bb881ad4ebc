use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::text::{jaccard_tokens, levenshtein_similarity};
use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMetric {
    Jaccard,
    Levenshtein,
}

impl PairMetric {
    fn score(self, a: &[String], b: &[String]) -> f64 {
        match self {
            PairMetric::Jaccard => jaccard_tokens(a, b),
            PairMetric::Levenshtein => levenshtein_similarity(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSamplingParams {
    pub metric: PairMetric,
    pub trials: usize,
    pub permutations: usize,
    pub seed: u64,
}

impl PairSamplingParams {
    pub fn new(metric: PairMetric, trials: usize, seed: u64) -> Self {
        Self { metric, trials, permutations: 10_000, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSamplingReport {
    pub metric: PairMetric,
    pub intra_mean: f64,
    pub inter_mean: f64,
    /// Two-sided permutation p-value for the difference of means.
    pub p_value: f64,
    pub trials: usize,
    pub permutations: usize,
    pub seed: u64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Compares token similarity of random same-cluster pairs against random
/// cross-cluster pairs.
pub fn group_pair_sampler(
    tokens: &[&[String]],
    assignment: &ClusterAssignment,
    params: &PairSamplingParams,
) -> Result<PairSamplingReport> {
    if tokens.len() != assignment.len() {
        return Err(Error::ShapeMismatch(format!("{} token lists for {} records", tokens.len(), assignment.len())));
    }
    if assignment.cluster_count() < 2 {
        return Err(Error::InvalidArgument("pair sampling needs at least 2 clusters".into()));
    }
    if params.trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let members = assignment.members();
    let eligible: Vec<usize> = (0..tokens.len()).filter(|&i| members[assignment.cluster_of()[i]].len() >= 2).collect();
    if eligible.is_empty() {
        return Err(Error::InvalidArgument("no cluster has two members to form an intra pair".into()));
    }
    let mut rng = seed::rng(params.seed);
    let n = tokens.len();
    let mut intra = Vec::with_capacity(params.trials);
    let mut inter = Vec::with_capacity(params.trials);
    for _ in 0..params.trials {
        let i = eligible[rng.random_range(0..eligible.len())];
        let own = &members[assignment.cluster_of()[i]];
        let j = loop {
            let j = own[rng.random_range(0..own.len())];
            if j != i {
                break j;
            }
        };
        intra.push(params.metric.score(tokens[i], tokens[j]));

        let a = rng.random_range(0..n);
        let b = loop {
            let b = rng.random_range(0..n);
            if assignment.cluster_of()[b] != assignment.cluster_of()[a] {
                break b;
            }
        };
        inter.push(params.metric.score(tokens[a], tokens[b]));
    }
    let intra_mean = mean(&intra);
    let inter_mean = mean(&inter);
    let observed = (intra_mean - inter_mean).abs();

    let mut pooled: Vec<f64> = intra.iter().chain(&inter).copied().collect();
    let half = params.trials;
    let mut extreme = 0usize;
    for _ in 0..params.permutations {
        pooled.shuffle(&mut rng);
        let d = (mean(&pooled[..half]) - mean(&pooled[half..])).abs();
        if d >= observed - 1e-12 {
            extreme += 1;
        }
    }
    let p_value = (extreme + 1) as f64 / (params.permutations + 1) as f64;
    Ok(PairSamplingReport {
        metric: params.metric,
        intra_mean,
        inter_mean,
        p_value,
        trials: params.trials,
        permutations: params.permutations,
        seed: params.seed,
    })
}
