//! Experiment orchestration: alternating clustering and remap training,
//! classifier heads, and the in-distribution / out-of-distribution comparison.

mod classifier;
mod clustering;
mod config;
mod debias;
mod eval;
mod experiment;
mod pca;

pub use classifier::{train_classifier, HeadReport, LinearHead};
pub use clustering::{cluster_and_group, cluster_embeddings};
pub use config::{ClusterConfig, ClusteringBackend, ExperimentConfig, HeadConfig, SeedSet, TrainConfig};
pub use debias::{train_debias, DebiasInput, DebiasSeeds, RoundRecord, StopReason, TrainReport};
pub use eval::{accuracy, evaluate, features_of, macro_f1, pr_auc, pr_curve, score_set, EvalReport, PrCurve, PrPoint, SetMetrics};
pub use experiment::{
    debias_split, fit_and_evaluate, pca_coordinates, prepare, run_experiment, synthetic_dataset, ClusteringSummary,
    DatasetSummary, ExperimentOutcome, ExperimentReport, HeadEvaluation, Preparation, Separation, SeparationBreakdown, SplitSummary,
};
pub use pca::{pca_project, Pca, DENSE_EIGEN_MAX_DIM};
