//! Quadruplet mining from cluster structure.
//!
//! For an anchor in an imbalanced cluster: the positive shares its label but
//! sits in another cluster, the intermediate shares label and cluster, the
//! negative carries a different label (any cluster). Each quadruplet expands
//! into three inter-cluster triplets and one intra-cluster triplet.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterAssignment, ClusterGrouping};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadruplet {
    pub anchor: usize,
    pub positive: usize,
    pub intermediate: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripletKind {
    InterCluster,
    IntraCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
    pub kind: TripletKind,
}

/// Which triplets to train on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiningMode {
    /// Cluster-aware quadruplets, four triplets each.
    #[default]
    Scissor,
    /// Label-only (anchor, same-label, other-label) triplets, ignoring clusters.
    Triplet,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningReport {
    pub anchors_considered: usize,
    pub quadruplets: usize,
    pub skipped_no_positive: usize,
    pub skipped_no_intermediate: usize,
    pub skipped_no_negative: usize,
}

impl MiningReport {
    pub fn skipped(&self) -> usize {
        self.skipped_no_positive + self.skipped_no_intermediate + self.skipped_no_negative
    }
}

impl Quadruplet {
    /// Checks the four role constraints against labels and clusters.
    pub fn satisfies_roles(&self, labels: &[i32], assignment: &ClusterAssignment, grouping: &ClusterGrouping) -> bool {
        let c = assignment.cluster_of();
        let ya = labels[self.anchor];
        let distinct = {
            let mut v = [self.anchor, self.positive, self.intermediate, self.negative];
            v.sort_unstable();
            v.windows(2).all(|w| w[0] != w[1])
        };
        distinct
            && grouping.is_imbalanced(c[self.anchor])
            && labels[self.positive] == ya
            && c[self.positive] != c[self.anchor]
            && labels[self.intermediate] == ya
            && c[self.intermediate] == c[self.anchor]
            && labels[self.negative] != ya
    }
}

/// `(A,P,N)`, `(A,I,N)`, `(I,P,N)` contrast labels; `(A,P,I)` contrasts clusters.
pub fn decompose(q: &Quadruplet) -> [Triplet; 4] {
    use TripletKind::*;
    let t = |anchor, positive, negative, kind| Triplet { anchor, positive, negative, kind };
    [
        t(q.anchor, q.positive, q.negative, InterCluster),
        t(q.anchor, q.intermediate, q.negative, InterCluster),
        t(q.intermediate, q.positive, q.negative, InterCluster),
        t(q.anchor, q.positive, q.intermediate, IntraCluster),
    ]
}

/// Records of one label, laid out cluster by cluster so "same label, other
/// cluster" is a contiguous complement.
struct LabelPool {
    members: Vec<usize>,
    span: BTreeMap<usize, (usize, usize)>,
}

impl LabelPool {
    fn cluster_span(&self, cluster: usize) -> (usize, usize) {
        self.span.get(&cluster).copied().unwrap_or((0, 0))
    }

    fn outside_cluster(&self, cluster: usize, rng: &mut impl Rng) -> Option<usize> {
        let (start, len) = self.cluster_span(cluster);
        let available = self.members.len() - len;
        if available == 0 {
            return None;
        }
        let mut r = rng.random_range(0..available);
        if r >= start {
            r += len;
        }
        Some(self.members[r])
    }

    fn inside_cluster_except(&self, cluster: usize, except: usize, rng: &mut impl Rng) -> Option<usize> {
        let (start, len) = self.cluster_span(cluster);
        if len < 2 {
            return None;
        }
        let slice = &self.members[start..start + len];
        let pos = slice.iter().position(|&i| i == except)?;
        let mut r = rng.random_range(0..len - 1);
        if r >= pos {
            r += 1;
        }
        Some(slice[r])
    }
}

fn label_pools(labels: &[i32], assignment: &ClusterAssignment) -> BTreeMap<i32, LabelPool> {
    let mut by_label: BTreeMap<i32, BTreeMap<usize, Vec<usize>>> = BTreeMap::new();
    for (i, (&l, &c)) in labels.iter().zip(assignment.cluster_of()).enumerate() {
        by_label.entry(l).or_default().entry(c).or_default().push(i);
    }
    by_label
        .into_iter()
        .map(|(l, clusters)| {
            let mut members = Vec::new();
            let mut span = BTreeMap::new();
            for (c, m) in clusters {
                span.insert(c, (members.len(), m.len()));
                members.extend(m);
            }
            (l, LabelPool { members, span })
        })
        .collect()
}

fn draw_negative(labels: &[i32], anchor_label: i32, count_other: usize, rng: &mut impl Rng) -> Option<usize> {
    if count_other == 0 {
        return None;
    }
    loop {
        let j = rng.random_range(0..labels.len());
        if labels[j] != anchor_label {
            return Some(j);
        }
    }
}

/// Draws `per_anchor` quadruplets for every record of every imbalanced
/// cluster. Anchors with an empty role pool are skipped and counted. The pools
/// are disjoint by construction, so the four indices are always distinct.
pub fn mine_quadruplets(
    labels: &[i32],
    assignment: &ClusterAssignment,
    grouping: &ClusterGrouping,
    per_anchor: usize,
    seed: u64,
) -> Result<(Vec<Quadruplet>, MiningReport)> {
    if labels.len() != assignment.len() {
        return Err(Error::ShapeMismatch(format!("{} labels for {} assignments", labels.len(), assignment.len())));
    }
    if grouping.flags.len() != assignment.cluster_count() {
        return Err(Error::ShapeMismatch("grouping does not match the assignment".into()));
    }
    if per_anchor == 0 {
        return Err(Error::InvalidArgument("per_anchor must be at least 1".into()));
    }
    if grouping.imbalanced_count() == 0 {
        return Err(Error::InvalidArgument("no imbalanced cluster to draw anchors from".into()));
    }
    let pools = label_pools(labels, assignment);
    let mut rng = seed::rng(seed);
    let mut report = MiningReport::default();
    let mut out = Vec::new();
    for (anchor, &c) in assignment.cluster_of().iter().enumerate() {
        if !grouping.is_imbalanced(c) {
            continue;
        }
        report.anchors_considered += 1;
        let y = labels[anchor];
        let pool = &pools[&y];
        let others = labels.len() - pool.members.len();
        if pool.members.len() == pool.cluster_span(c).1 {
            report.skipped_no_positive += 1;
            continue;
        }
        if pool.cluster_span(c).1 < 2 {
            report.skipped_no_intermediate += 1;
            continue;
        }
        if others == 0 {
            report.skipped_no_negative += 1;
            continue;
        }
        for _ in 0..per_anchor {
            let positive = pool.outside_cluster(c, &mut rng).expect("checked non-empty");
            let intermediate = pool.inside_cluster_except(c, anchor, &mut rng).expect("checked non-empty");
            let negative = draw_negative(labels, y, others, &mut rng).expect("checked non-empty");
            out.push(Quadruplet { anchor, positive, intermediate, negative });
        }
    }
    report.quadruplets = out.len();
    if out.is_empty() {
        return Err(Error::NothingMined { anchors: report.anchors_considered });
    }
    Ok((out, report))
}

/// Label-only triplets for the plain triplet-loss ablation: anchors are the
/// same imbalanced-cluster records, positives any other record of the same
/// label, negatives any record of another label.
pub fn mine_label_triplets(
    labels: &[i32],
    assignment: &ClusterAssignment,
    grouping: &ClusterGrouping,
    per_anchor: usize,
    seed: u64,
) -> Result<(Vec<Triplet>, MiningReport)> {
    if per_anchor == 0 {
        return Err(Error::InvalidArgument("per_anchor must be at least 1".into()));
    }
    let pools = label_pools(labels, assignment);
    let mut rng = seed::rng(seed);
    let mut report = MiningReport::default();
    let mut out = Vec::new();
    for (anchor, &c) in assignment.cluster_of().iter().enumerate() {
        if !grouping.is_imbalanced(c) {
            continue;
        }
        report.anchors_considered += 1;
        let y = labels[anchor];
        let same = &pools[&y].members;
        let others = labels.len() - same.len();
        if same.len() < 2 {
            report.skipped_no_positive += 1;
            continue;
        }
        if others == 0 {
            report.skipped_no_negative += 1;
            continue;
        }
        for _ in 0..per_anchor {
            let positive = loop {
                let p = same[rng.random_range(0..same.len())];
                if p != anchor {
                    break p;
                }
            };
            let negative = draw_negative(labels, y, others, &mut rng).expect("checked non-empty");
            out.push(Triplet { anchor, positive, negative, kind: TripletKind::InterCluster });
        }
    }
    report.quadruplets = out.len();
    if out.is_empty() {
        return Err(Error::NothingMined { anchors: report.anchors_considered });
    }
    Ok((out, report))
}

/// Epoch-seeded shuffle, then fixed-size batches; the last may be short.
pub fn batch_iter(triplets: &[Triplet], batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<Triplet>>> {
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("no triplets to batch".into()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be at least 1".into()));
    }
    let mut order = triplets.to_vec();
    order.shuffle(&mut seed::rng(seed::derive_indexed(seed, "epoch", epoch)));
    Ok(order.chunks(batch_size).map(<[Triplet]>::to_vec).collect())
}
