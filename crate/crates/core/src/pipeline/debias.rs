use serde::{Deserialize, Serialize};

use super::clustering::cluster_and_group;
use super::config::{ClusterConfig, TrainConfig};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::metrics::{default_probes, hopkins};
use crate::miner::{batch_iter, decompose, mine_label_triplets, mine_quadruplets, MiningMode, MiningReport, Triplet};
use crate::remap::{adamw_step, batch_loss_and_grad, init_params, remap_matrix, OptimizerState, RemapConfig, RemapParams};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    #[serde(rename = "hopkins converged")]
    HopkinsConverged,
    #[serde(rename = "no imbalanced clusters")]
    NoImbalancedClusters,
    #[serde(rename = "max rounds")]
    MaxRounds,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::HopkinsConverged => "hopkins converged",
            StopReason::NoImbalancedClusters => "no imbalanced clusters",
            StopReason::MaxRounds => "max rounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub clusters: usize,
    pub imbalanced_clusters: usize,
    /// Pool records in imbalanced clusters, the Hopkins sample of this round.
    pub imbalanced_samples: usize,
    pub mining: MiningReport,
    pub triplets: usize,
    /// Mean per-triplet loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub hopkins: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub rounds: Vec<RoundRecord>,
    /// Mean per-triplet loss of each round's final epoch.
    pub loss_curve: Vec<f64>,
    /// Hopkins statistic of each round's imbalanced-group samples: raw
    /// embeddings before the first round, then remapped after every round.
    pub hopkins_trajectory: Vec<f64>,
    pub rounds_executed: usize,
    pub stop_reason: StopReason,
}

/// Inputs of the alternating clustering / remapping loop; `pool` indexes the
/// rows that are clustered, mined and trained on.
#[derive(Debug, Clone, Copy)]
pub struct DebiasInput<'a, T> {
    pub features: &'a Matrix<T>,
    pub labels: &'a [i32],
    pub pool: &'a [usize],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DebiasSeeds {
    pub clustering: u64,
    pub init: u64,
    pub mining: u64,
    pub batching: u64,
    pub hopkins: u64,
}

impl From<&super::config::SeedSet> for DebiasSeeds {
    fn from(s: &super::config::SeedSet) -> Self {
        Self { clustering: s.clustering, init: s.init, mining: s.mining, batching: s.batching, hopkins: s.hopkins }
    }
}

fn pool_triplets(
    labels: &[i32],
    assignment: &crate::cluster::ClusterAssignment,
    grouping: &crate::cluster::ClusterGrouping,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(Vec<Triplet>, MiningReport)> {
    match cfg.mining {
        MiningMode::Scissor => {
            let (quads, report) = mine_quadruplets(labels, assignment, grouping, cfg.quadruplets_per_anchor, seed)?;
            Ok((quads.iter().flat_map(decompose).collect(), report))
        }
        MiningMode::Triplet => mine_label_triplets(labels, assignment, grouping, cfg.quadruplets_per_anchor, seed),
    }
}

/// Trains the remapping network until the monitored samples stop showing
/// clustering tendency, no imbalanced cluster is left, or `max_rounds` passes.
pub fn train_debias<T: Scalar>(
    input: DebiasInput<'_, T>,
    remap: &RemapConfig,
    cluster: &ClusterConfig,
    cfg: &TrainConfig,
    seeds: DebiasSeeds,
) -> Result<(RemapParams<T>, TrainReport)> {
    cfg.validate()?;
    let x = input.features;
    let pool_x = x.select_rows(input.pool);
    let pool_labels: Vec<i32> = input.pool.iter().map(|&i| input.labels[i]).collect();
    let group_hopkins = |m: &Matrix<T>| {
        let probes = cfg.hopkins_probes.unwrap_or_else(|| default_probes(m.rows()));
        hopkins(m, probes, seeds.hopkins).map(|h| h.to_f64_lossy())
    };

    let mut params = init_params::<T>(x.cols(), remap, seeds.init)?;
    let mut state = OptimizerState::new(&params.tensors);
    let opt = cfg.optimizer();
    let beta = T::lit(cfg.beta);
    let mut report = TrainReport {
        rounds: Vec::new(),
        loss_curve: Vec::new(),
        hopkins_trajectory: Vec::new(),
        rounds_executed: 0,
        stop_reason: StopReason::MaxRounds,
    };
    let (lo, hi) = (0.5 - cfg.hopkins_epsilon, 0.5 + cfg.hopkins_epsilon);
    let mut streak = 0;

    for round in 0..cfg.max_rounds {
        let r = round as u64;
        let current = if round == 0 { pool_x.clone() } else { remap_matrix(&params, &pool_x)? };
        let (assignment, grouping) = cluster_and_group(
            &current,
            &pool_labels,
            cluster,
            seed::derive_indexed(seeds.clustering, "round", r),
        )?;
        if grouping.imbalanced_count() == 0 {
            report.stop_reason = StopReason::NoImbalancedClusters;
            break;
        }
        let group: Vec<usize> =
            (0..pool_x.rows()).filter(|&i| grouping.is_imbalanced(assignment.cluster_of()[i])).collect();
        let group_x = pool_x.select_rows(&group);
        if round == 0 {
            report.hopkins_trajectory.push(group_hopkins(&group_x)?);
        }
        let (local, mining) =
            pool_triplets(&pool_labels, &assignment, &grouping, cfg, seed::derive_indexed(seeds.mining, "round", r))?;
        let triplets: Vec<Triplet> = local
            .into_iter()
            .map(|t| Triplet { anchor: input.pool[t.anchor], positive: input.pool[t.positive], negative: input.pool[t.negative], ..t })
            .collect();

        let mut epoch_losses = Vec::with_capacity(cfg.recluster_interval);
        let batch_seed = seed::derive_indexed(seeds.batching, "round", r);
        for epoch in 0..cfg.recluster_interval {
            let mut total = 0.0;
            for batch in batch_iter(&triplets, cfg.batch_size, batch_seed, epoch as u64)? {
                let inputs: Vec<[&[T]; 3]> =
                    batch.iter().map(|t| [x.row(t.anchor), x.row(t.positive), x.row(t.negative)]).collect();
                let (loss, grads) = batch_loss_and_grad(&params, &inputs, beta)?;
                total += loss.to_f64_lossy();
                adamw_step(&mut params, &grads, &mut state, &opt)?;
            }
            epoch_losses.push(total / triplets.len() as f64);
        }

        let h = group_hopkins(&remap_matrix(&params, &group_x)?)?;
        report.loss_curve.push(*epoch_losses.last().expect("at least one epoch"));
        report.hopkins_trajectory.push(h);
        report.rounds.push(RoundRecord {
            round,
            clusters: assignment.cluster_count(),
            imbalanced_clusters: grouping.imbalanced_count(),
            imbalanced_samples: group.len(),
            mining,
            triplets: triplets.len(),
            epoch_losses,
            hopkins: h,
        });
        report.rounds_executed = round + 1;
        streak = if (lo..=hi).contains(&h) { streak + 1 } else { 0 };
        if streak >= cfg.hopkins_patience {
            report.stop_reason = StopReason::HopkinsConverged;
            break;
        }
    }
    Ok((params, report))
}
