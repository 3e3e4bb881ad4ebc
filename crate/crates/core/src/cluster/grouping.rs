use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFlag {
    Balanced,
    Imbalanced,
}

impl GroupFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupFlag::Balanced => "balanced",
            GroupFlag::Imbalanced => "imbalanced",
        }
    }
}

/// Record indices kept in each group after downsampling, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMembers {
    pub imbalanced: Vec<usize>,
    pub balanced: Vec<usize>,
}

/// Per-cluster balanced/imbalanced flags, indexed by cluster id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGrouping {
    pub flags: Vec<GroupFlag>,
    pub majority_fraction: Vec<f64>,
    pub majority_label: Vec<i32>,
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<GroupMembers>,
}

impl ClusterGrouping {
    pub fn imbalanced_clusters(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &f)| f == GroupFlag::Imbalanced).map(|(c, _)| c)
    }

    pub fn imbalanced_count(&self) -> usize {
        self.imbalanced_clusters().count()
    }

    pub fn is_imbalanced(&self, cluster: usize) -> bool {
        self.flags[cluster] == GroupFlag::Imbalanced
    }
}

/// A cluster is imbalanced iff it has at least `min_size` members and its most
/// frequent label covers at least `tau` of them. Ties go to the smaller label.
pub fn label_imbalance(
    assignment: &ClusterAssignment,
    labels: &[i32],
    tau: f64,
    min_size: usize,
) -> Result<ClusterGrouping> {
    if assignment.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} assignments for {} labels",
            assignment.len(),
            labels.len()
        )));
    }
    if !(tau > 0.5 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside (0.5, 1]")));
    }
    let k = assignment.cluster_count();
    let mut counts: Vec<BTreeMap<i32, usize>> = vec![BTreeMap::new(); k];
    for (&c, &l) in assignment.cluster_of().iter().zip(labels) {
        *counts[c].entry(l).or_insert(0) += 1;
    }
    let mut grouping = ClusterGrouping {
        flags: Vec::with_capacity(k),
        majority_fraction: Vec::with_capacity(k),
        majority_label: Vec::with_capacity(k),
        sizes: Vec::with_capacity(k),
        members: None,
    };
    for c in counts {
        let size: usize = c.values().sum();
        let (label, top) = c
            .iter()
            .fold((0, 0), |best, (&l, &n)| if n > best.1 { (l, n) } else { best });
        let fraction = top as f64 / size as f64;
        let flag = if size >= min_size && fraction >= tau { GroupFlag::Imbalanced } else { GroupFlag::Balanced };
        grouping.flags.push(flag);
        grouping.majority_fraction.push(fraction);
        grouping.majority_label.push(label);
        grouping.sizes.push(size);
    }
    Ok(grouping)
}

/// Subsamples both groups to the same size with an equal per-label quota: the
/// smallest (group, label) count over the whole label set.
pub fn downsample_groups(
    grouping: &ClusterGrouping,
    assignment: &ClusterAssignment,
    labels: &[i32],
    label_set: &[i32],
    seed: u64,
) -> Result<ClusterGrouping> {
    let mut pools: [BTreeMap<i32, Vec<usize>>; 2] = Default::default();
    for &l in label_set {
        pools[0].insert(l, Vec::new());
        pools[1].insert(l, Vec::new());
    }
    for (i, (&c, &l)) in assignment.cluster_of().iter().zip(labels).enumerate() {
        let g = usize::from(grouping.flags[c] == GroupFlag::Balanced);
        pools[g]
            .get_mut(&l)
            .ok_or_else(|| Error::InvalidArgument(format!("label {l} is not in the label set")))?
            .push(i);
    }
    let names = ["imbalanced", "balanced"];
    for (g, pool) in pools.iter().enumerate() {
        if pool.values().all(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!("the {} group is empty", names[g])));
        }
        if let Some((&label, _)) = pool.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::MissingLabel { group: names[g], label });
        }
    }
    let quota = pools.iter().flat_map(|p| p.values().map(Vec::len)).min().unwrap_or(0);
    let mut rng = seed::rng(seed);
    let mut picked: [Vec<usize>; 2] = Default::default();
    for (g, pool) in pools.iter_mut().enumerate() {
        for members in pool.values_mut() {
            members.shuffle(&mut rng);
            picked[g].extend_from_slice(&members[..quota]);
        }
        picked[g].sort_unstable();
    }
    let [imbalanced, balanced] = picked;
    Ok(ClusterGrouping { members: Some(GroupMembers { imbalanced, balanced }), ..grouping.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cluster(labels: &[i32], tau: f64) -> ClusterGrouping {
        let a = ClusterAssignment::new(vec![0; labels.len()]).unwrap();
        label_imbalance(&a, labels, tau, 1).unwrap()
    }

    #[test]
    fn threshold_arithmetic() {
        let g = one_cluster(&[1, 1, 1, 1], 0.8);
        assert_eq!((g.flags[0], g.majority_fraction[0]), (GroupFlag::Imbalanced, 1.0));
        let g = one_cluster(&[0, 1, 0, 1], 0.8);
        assert_eq!((g.flags[0], g.majority_fraction[0]), (GroupFlag::Balanced, 0.5));
        let g = one_cluster(&[1, 1, 1, 0], 0.8);
        assert_eq!((g.flags[0], g.majority_fraction[0]), (GroupFlag::Balanced, 0.75));
    }

    #[test]
    fn small_clusters_count_as_balanced() {
        let a = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1, 1, 1, 1]).unwrap();
        let g = label_imbalance(&a, &[1, 1, 1, 0, 0, 0, 0, 0, 0], 0.8, 5).unwrap();
        assert_eq!(g.flags, vec![GroupFlag::Balanced, GroupFlag::Imbalanced]);
    }

    #[test]
    fn downsample_min_size_arithmetic() {
        // cluster 0: 600 records 300/300 forced imbalanced; cluster 1: 400 records 200/200
        let mut cluster_of = vec![0; 600];
        cluster_of.extend(vec![1; 400]);
        let labels: Vec<i32> = (0..1000).map(|i| (i % 2) as i32).collect();
        let a = ClusterAssignment::new(cluster_of).unwrap();
        let grouping = ClusterGrouping {
            flags: vec![GroupFlag::Imbalanced, GroupFlag::Balanced],
            majority_fraction: vec![0.5, 0.5],
            majority_label: vec![0, 0],
            sizes: vec![600, 400],
            members: None,
        };
        let out = downsample_groups(&grouping, &a, &labels, &[0, 1], 4).unwrap();
        let m = out.members.as_ref().unwrap();
        assert_eq!((m.imbalanced.len(), m.balanced.len()), (400, 400));
        for group in [&m.imbalanced, &m.balanced] {
            assert_eq!(group.iter().filter(|&&i| labels[i] == 1).count(), 200);
        }
        assert!(m.imbalanced.iter().all(|&i| i < 600));
        assert_eq!(out, downsample_groups(&grouping, &a, &labels, &[0, 1], 4).unwrap());
    }

    #[test]
    fn missing_label_is_named() {
        let a = ClusterAssignment::new(vec![0, 0, 1, 1]).unwrap();
        let grouping = ClusterGrouping {
            flags: vec![GroupFlag::Imbalanced, GroupFlag::Balanced],
            majority_fraction: vec![0.5, 1.0],
            majority_label: vec![0, 0],
            sizes: vec![2, 2],
            members: None,
        };
        let err = downsample_groups(&grouping, &a, &[0, 1, 0, 0], &[0, 1], 0).unwrap_err();
        assert!(matches!(err, Error::MissingLabel { group: "balanced", label: 1 }));
    }
}
