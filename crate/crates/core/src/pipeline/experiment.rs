use serde::{Deserialize, Serialize};

use super::classifier::{train_classifier, HeadReport, LinearHead};
use super::clustering::cluster_and_group;
use super::config::{ExperimentConfig, HeadConfig, SeedSet};
use super::debias::{train_debias, DebiasInput, TrainReport};
use super::eval::{evaluate, EvalReport};
use crate::cluster::{downsample_groups, ClusterAssignment, ClusterGrouping};
use crate::embed::{generate_synthetic, split_id_ood, DatasetSplit, EmbeddingDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{ari, centroid_cos_separation, hopkins};
use crate::remap::{remap_matrix, RemapParams};
use crate::seed;

/// Clustering, grouping and the ID/OOD split of the whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    pub assignment: ClusterAssignment,
    /// Downsampled grouping.
    pub grouping: ClusterGrouping,
    pub split: DatasetSplit,
}

impl Preparation {
    pub fn summary(&self, truth: Option<&ClusterAssignment>) -> Result<ClusteringSummary> {
        let members = self.grouping.members.as_ref().expect("downsampled grouping");
        Ok(ClusteringSummary {
            clusters: self.assignment.cluster_count(),
            imbalanced_clusters: self.grouping.imbalanced_count(),
            imbalanced_members: members.imbalanced.len(),
            balanced_members: members.balanced.len(),
            ari_vs_truth: truth.map(|t| ari(&self.assignment, t)).transpose()?,
        })
    }
}

pub fn prepare(dataset: &EmbeddingDataset, cfg: &ExperimentConfig, seeds: &SeedSet) -> Result<Preparation> {
    let x = dataset.matrix::<f64>();
    let labels = dataset.labels();
    let (assignment, grouping) = cluster_and_group(&x, &labels, &cfg.cluster, seeds.clustering)?;
    if grouping.imbalanced_count() == 0 {
        return Err(Error::InvalidArgument("the dataset has no imbalanced cluster".into()));
    }
    let grouping = downsample_groups(&grouping, &assignment, &labels, dataset.label_set(), seeds.downsample)?;
    let split = split_id_ood(&grouping, cfg.id_test_size, seeds.split)?;
    Ok(Preparation { assignment, grouping, split })
}

/// Remap training on everything outside the two test sets, monitored on the training split.
pub fn debias_split(
    dataset: &EmbeddingDataset,
    split: &DatasetSplit,
    cfg: &ExperimentConfig,
    seeds: &SeedSet,
) -> Result<(RemapParams<f64>, TrainReport)> {
    let x = dataset.matrix::<f64>();
    let labels = dataset.labels();
    let pool = split.non_test(dataset.len());
    let input = DebiasInput { features: &x, labels: &labels, pool: &pool };
    train_debias(input, &cfg.remap, &cfg.cluster, &cfg.train, seeds.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadEvaluation {
    pub eval: EvalReport,
    pub head: HeadReport,
}

/// Trains a head on the (optionally remapped) training split and scores both test sets.
pub fn fit_and_evaluate(
    dataset: &EmbeddingDataset,
    split: &DatasetSplit,
    remap: Option<&RemapParams<f64>>,
    head_cfg: &HeadConfig,
    seeds: &SeedSet,
) -> Result<(LinearHead<f64>, HeadEvaluation)> {
    let x = dataset.matrix::<f64>();
    let labels = dataset.labels();
    let features = match remap {
        Some(p) => remap_matrix(p, &x.select_rows(&split.train))?,
        None => x.select_rows(&split.train),
    };
    let train_labels: Vec<i32> = split.train.iter().map(|&i| labels[i]).collect();
    let (head, report) = train_classifier(&features, &train_labels, dataset.label_set(), head_cfg, seeds.head)?;
    let eval = evaluate(&head, remap, &x, &labels, split)?;
    Ok((head, HeadEvaluation { eval, head: report }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub dim: usize,
    pub labels: Vec<i32>,
    pub id_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSummary {
    pub clusters: usize,
    pub imbalanced_clusters: usize,
    pub imbalanced_members: usize,
    pub balanced_members: usize,
    /// Agreement with the generating blobs when they are known.
    pub ari_vs_truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub hash: String,
    pub train: usize,
    pub id_test: usize,
    pub ood_test: usize,
}

impl SplitSummary {
    pub fn new(split: &DatasetSplit, dataset: &EmbeddingDataset) -> Self {
        Self {
            hash: split.hash(dataset),
            train: split.train.len(),
            id_test: split.id_test.len(),
            ood_test: split.ood_test.len(),
        }
    }
}

/// Mean inter-class centroid cosine before and after remapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub before: f64,
    pub after: f64,
    pub delta_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationBreakdown {
    pub ood_test: Separation,
    pub train: Separation,
    /// Training split and both test sets together.
    pub evaluated: Separation,
}

fn separation(x: &Matrix<f64>, labels: &[i32], indices: &[usize], params: &RemapParams<f64>) -> Result<Separation> {
    let l: Vec<i32> = indices.iter().map(|&i| labels[i]).collect();
    let raw = x.select_rows(indices);
    let before = centroid_cos_separation(&raw, &l)?;
    let after = centroid_cos_separation(&remap_matrix(params, &raw)?, &l)?;
    Ok(Separation { before, after, delta_theta: before - after })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seeds: SeedSet,
    pub dataset: DatasetSummary,
    pub clustering: ClusteringSummary,
    pub split: SplitSummary,
    pub baseline: HeadEvaluation,
    pub scissor: HeadEvaluation,
    pub train: TrainReport,
    /// Separation change on the out-of-distribution test set, where labels
    /// cannot be told apart through cluster membership.
    pub delta_theta: f64,
    pub separation: SeparationBreakdown,
    /// Hopkins statistic of the training split, raw and remapped.
    pub hopkins_before: f64,
    pub hopkins_after: f64,
    pub remap_forward_flops: usize,
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub preparation: Preparation,
    pub params: RemapParams<f64>,
    pub baseline_head: LinearHead<f64>,
    pub scissor_head: LinearHead<f64>,
}

/// Dataset named by the config's synthetic spec, with the master seed applied.
pub fn synthetic_dataset(cfg: &ExperimentConfig) -> Result<(EmbeddingDataset, ClusterAssignment)> {
    let spec = cfg
        .resolved_synthetic()
        .ok_or_else(|| Error::InvalidArgument("config has no synthetic data source".into()))?;
    generate_synthetic(&spec)
}

/// Baseline versus debiased classifier on one shared split.
pub fn run_experiment(
    dataset: &EmbeddingDataset,
    cfg: &ExperimentConfig,
    truth: Option<&ClusterAssignment>,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let seeds = SeedSet::new(cfg.seed);
    let preparation = prepare(dataset, cfg, &seeds)?;
    let split = &preparation.split;

    let (baseline_head, baseline) = fit_and_evaluate(dataset, split, None, &cfg.head, &seeds)?;
    let (params, train) = debias_split(dataset, split, cfg, &seeds)?;
    let (scissor_head, scissor) = fit_and_evaluate(dataset, split, Some(&params), &cfg.head, &seeds)?;

    let x = dataset.matrix::<f64>();
    let labels = dataset.labels();
    let evaluated: Vec<usize> = split.train.iter().chain(&split.id_test).chain(&split.ood_test).copied().collect();
    let breakdown = SeparationBreakdown {
        ood_test: separation(&x, &labels, &split.ood_test, &params)?,
        train: separation(&x, &labels, &split.train, &params)?,
        evaluated: separation(&x, &labels, &evaluated, &params)?,
    };

    let train_x = x.select_rows(&split.train);
    let probes = cfg.train.hopkins_probes.unwrap_or_else(|| crate::metrics::default_probes(train_x.rows()));
    let hopkins_before = hopkins(&train_x, probes, seeds.hopkins)?;
    let hopkins_after = hopkins(&remap_matrix(&params, &train_x)?, probes, seeds.hopkins)?;

    let report = ExperimentReport {
        config: ExperimentConfig { synthetic: cfg.resolved_synthetic(), ..cfg.clone() },
        seeds: seeds.clone(),
        dataset: DatasetSummary {
            records: dataset.len(),
            dim: dataset.dim(),
            labels: dataset.label_set().to_vec(),
            id_hash: seed::hash_ids(&dataset.ids()),
        },
        clustering: preparation.summary(truth)?,
        split: SplitSummary::new(split, dataset),
        baseline,
        scissor,
        train,
        delta_theta: breakdown.ood_test.delta_theta,
        separation: breakdown,
        hopkins_before,
        hopkins_after,
        remap_forward_flops: params.forward_flops(),
    };
    Ok(ExperimentOutcome { report, preparation, params, baseline_head, scissor_head })
}

/// Rows of `x` for `indices` projected onto the top two principal components.
pub fn pca_coordinates(x: &Matrix<f64>, indices: &[usize]) -> Result<super::pca::Pca<f64>> {
    super::pca::pca_project(&x.select_rows(indices), 2.min(x.cols()))
}
