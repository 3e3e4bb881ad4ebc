use serde::{Deserialize, Serialize};

use crate::cluster::{KMeansParams, MclParams};
use crate::embed::SyntheticSpec;
use crate::error::{Error, Result};
use crate::miner::MiningMode;
use crate::remap::{AdamWConfig, RemapConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringBackend {
    #[default]
    Mcl,
    Kmeans,
}

impl std::str::FromStr for ClusteringBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcl" => Ok(Self::Mcl),
            "kmeans" => Ok(Self::Kmeans),
            other => Err(Error::InvalidArgument(format!("unknown clustering backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub backend: ClusteringBackend,
    pub mcl: MclParams,
    /// Keep only the strongest similarities per column before normalizing.
    pub sparsify_top_k: Option<usize>,
    pub self_loop: f64,
    pub kmeans: KMeansParams,
    /// Majority fraction at or above which a cluster is imbalanced.
    pub tau: f64,
    pub min_size: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            backend: ClusteringBackend::Mcl,
            mcl: MclParams::default(),
            sparsify_top_k: None,
            self_loop: 1.0,
            kmeans: KMeansParams::default(),
            tau: 0.8,
            min_size: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Triplet margin.
    pub beta: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Epochs of remap training between re-clusterings.
    pub recluster_interval: usize,
    pub hopkins_epsilon: f64,
    /// Consecutive in-band Hopkins checks needed to stop.
    pub hopkins_patience: usize,
    /// Probes for the monitoring Hopkins statistic; `None` uses the default rule.
    pub hopkins_probes: Option<usize>,
    pub max_rounds: usize,
    pub quadruplets_per_anchor: usize,
    pub mining: MiningMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 0.2,
            lr: 3e-5,
            weight_decay: 0.01,
            batch_size: 8,
            recluster_interval: 5,
            hopkins_epsilon: 0.1,
            hopkins_patience: 2,
            hopkins_probes: None,
            max_rounds: 50,
            quadruplets_per_anchor: 1,
            mining: MiningMode::Scissor,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.beta >= 0.0) {
            return fail("beta must be non-negative");
        }
        if !(self.lr > 0.0) {
            return fail("lr must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return fail("weight_decay must be non-negative");
        }
        if self.recluster_interval == 0 {
            return fail("recluster_interval must be at least 1");
        }
        if !(self.hopkins_epsilon > 0.0 && self.hopkins_epsilon < 0.5) {
            return fail("hopkins_epsilon must lie in (0, 0.5)");
        }
        if self.max_rounds == 0 || self.batch_size == 0 || self.quadruplets_per_anchor == 0 {
            return fail("max_rounds, batch_size and quadruplets_per_anchor must be at least 1");
        }
        if self.hopkins_patience == 0 {
            return fail("hopkins_patience must be at least 1");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig { lr: self.lr, weight_decay: self.weight_decay, ..Default::default() }
    }
}

/// Linear classification head training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self { epochs: 200, lr: 1e-2, weight_decay: 0.0, batch_size: 32 }
    }
}

/// Everything one experiment run depends on besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Data source when no dataset file is given; its seed is replaced by `seed`.
    pub synthetic: Option<SyntheticSpec>,
    pub cluster: ClusterConfig,
    pub remap: RemapConfig,
    pub train: TrainConfig,
    pub head: HeadConfig,
    /// Records held out of the imbalanced group for in-distribution testing.
    pub id_test_size: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            synthetic: None,
            cluster: ClusterConfig::default(),
            remap: RemapConfig::default(),
            train: TrainConfig::default(),
            head: HeadConfig::default(),
            id_test_size: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.cluster.mcl.validate()?;
        if self.head.epochs == 0 || self.head.batch_size == 0 || !(self.head.lr > 0.0) {
            return Err(Error::InvalidArgument("head epochs, batch_size and lr must be positive".into()));
        }
        if let Some(spec) = &self.synthetic {
            spec.validate()?;
        }
        Ok(())
    }

    /// The synthetic spec with the master seed applied.
    pub fn resolved_synthetic(&self) -> Option<SyntheticSpec> {
        self.synthetic.clone().map(|s| SyntheticSpec { seed: self.seed, ..s })
    }
}

/// Named sub-seeds of a master seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub master: u64,
    pub clustering: u64,
    pub downsample: u64,
    pub split: u64,
    pub init: u64,
    pub mining: u64,
    pub batching: u64,
    pub hopkins: u64,
    pub head: u64,
}

impl SeedSet {
    pub fn new(master: u64) -> Self {
        let d = |n| crate::seed::derive(master, n);
        Self {
            master,
            clustering: d("clustering"),
            downsample: d("downsample"),
            split: d("split"),
            init: d("init"),
            mining: d("mining"),
            batching: d("batching"),
            hopkins: d("hopkins"),
            head: d("head"),
        }
    }
}
