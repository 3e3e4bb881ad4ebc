//! Runs the bundled planted-bias benchmark: two label-pure blobs and four
//! balanced ones in 32 dimensions.

use std::time::Instant;

use scissor::pipeline::{run_experiment, synthetic_dataset, ClusteringBackend, ExperimentConfig, ExperimentReport};

pub const PLANTED_BIAS: &str = include_str!("../../../configs/planted_bias.json");

pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn planted_bias_config(seed: u64, backend: ClusteringBackend) -> ExperimentConfig {
    let mut cfg: ExperimentConfig = serde_json::from_str(PLANTED_BIAS).expect("bundled config parses");
    cfg.seed = seed;
    cfg.cluster.backend = backend;
    cfg
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub seed: u64,
    pub report: ExperimentReport,
    /// Wall time of data generation plus the full experiment.
    pub seconds: f64,
}

pub fn run_planted(seed: u64, backend: ClusteringBackend) -> scissor::Result<BenchmarkRun> {
    let cfg = planted_bias_config(seed, backend);
    let start = Instant::now();
    let (dataset, truth) = synthetic_dataset(&cfg)?;
    let outcome = run_experiment(&dataset, &cfg, Some(&truth))?;
    Ok(BenchmarkRun { seed, report: outcome.report, seconds: start.elapsed().as_secs_f64() })
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}
