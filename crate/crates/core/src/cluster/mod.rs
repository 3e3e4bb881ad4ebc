//! Semantic clustering: Markov clustering over cosine similarity (with k-means
//! as an alternative backend), imbalance labelling and group downsampling.

mod grouping;
mod kmeans;
mod markov;
mod mcl;

use serde::{Deserialize, Serialize};

pub use grouping::{downsample_groups, label_imbalance, ClusterGrouping, GroupFlag, GroupMembers};
pub use kmeans::{kmeans, KMeansOutcome, KMeansParams};
pub use markov::{build_markov_matrix, MarkovMatrix};
pub use mcl::{mcl, mcl_observed, FlowMatrix, MclOutcome, MclParams};

use crate::error::{Error, Result};

/// Point-to-cluster map with dense, non-empty cluster ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    cluster_of: Vec<usize>,
    cluster_count: usize,
}

impl ClusterAssignment {
    /// Validates that ids form `0..k` with every id used.
    pub fn new(cluster_of: Vec<usize>) -> Result<Self> {
        let cluster_count = cluster_of.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; cluster_count];
        for &c in &cluster_of {
            used[c] = true;
        }
        if let Some(gap) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidArgument(format!("cluster id {gap} is empty")));
        }
        Ok(Self { cluster_of, cluster_count })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn from_raw_labels<L: Copy + Eq + std::hash::Hash>(raw: &[L]) -> Self {
        let mut map = std::collections::HashMap::new();
        let cluster_of = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { cluster_of, cluster_count: map.len() }
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn len(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cluster_of.is_empty()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (i, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.cluster_count];
        for &c in &self.cluster_of {
            out[c] += 1;
        }
        out
    }

    /// Canonical form: ids renumbered by first appearance.
    pub fn canonical(&self) -> Self {
        Self::from_raw_labels(&self.cluster_of)
    }
}
