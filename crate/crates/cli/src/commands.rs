//! One function per subcommand. Every JSON artifact carries the resolved
//! config and seed set; `manifest.json` lists what a run wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use scissor::cluster::{ClusterAssignment, ClusterGrouping};
use scissor::embed::{generate_synthetic, read_dataset, write_dataset, BlobSpec, DatasetSplit, EmbeddingDataset, Format, SplitFile, SyntheticSpec};
use scissor::export::{read_assignment_csv, write_assignment_csv, write_pca_csv, write_pr_csv, write_quadruplets_csv};
use scissor::linalg::Matrix;
use scissor::metrics::{default_probes, hopkins as hopkins_statistic};
use scissor::miner::{mine_quadruplets, MiningReport};
use scissor::pipeline::{
    debias_split, fit_and_evaluate, pca_project, prepare, run_experiment, ClusteringSummary, ExperimentConfig, HeadEvaluation,
    SeedSet, TrainReport,
};
use scissor::remap::{read_checkpoint, remap_matrix, write_checkpoint, RemapParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, resolve, Overrides, PLANTED_BIAS};
use crate::{CliError, Common};

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    command: String,
    config: ExperimentConfig,
    seeds: SeedSet,
    result: T,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    seeds: &'a SeedSet,
    inputs: BTreeMap<&'a str, String>,
    artifacts: Vec<String>,
}

/// Output directory plus the bookkeeping for its manifest.
struct Run<'a> {
    command: &'a str,
    out: PathBuf,
    config: ExperimentConfig,
    seeds: SeedSet,
    inputs: BTreeMap<&'a str, String>,
    artifacts: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(command: &'a str, common: &Common, config: ExperimentConfig) -> CliResult<Self> {
        fs::create_dir_all(&common.out).map_err(scissor::Error::from)?;
        let seeds = SeedSet::new(config.seed);
        let mut inputs = BTreeMap::new();
        if let Some(c) = &common.config {
            inputs.insert("config", c.display().to_string());
        }
        Ok(Self { command, out: common.out.clone(), config, seeds, inputs, artifacts: Vec::new() })
    }

    fn input(&mut self, name: &'a str, path: &Path) {
        self.inputs.insert(name, path.display().to_string());
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult {
        let path = self.path(name);
        write_json(&path, value)
    }

    fn envelope<T: Serialize>(&mut self, name: &str, result: T) -> CliResult {
        let env = Envelope { command: self.command.to_string(), config: self.config.clone(), seeds: self.seeds.clone(), result };
        self.json(name, &env)
    }

    fn finish(self) -> CliResult {
        let manifest = Manifest {
            command: self.command,
            config: &self.config,
            seeds: &self.seeds,
            inputs: self.inputs,
            artifacts: self.artifacts,
        };
        write_json(&self.out.join("manifest.json"), &manifest)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(scissor::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(scissor::Error::from)?;
    Ok(())
}

fn read_envelope<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(scissor::Error::from)?;
    let env: Envelope<T> = serde_json::from_str(&text).map_err(scissor::Error::from)?;
    Ok(env.result)
}

fn overrides(common: &Common) -> Overrides {
    Overrides { seed: common.seed, backend: common.backend.clone(), remap: common.remap.clone() }
}

fn config(common: &Common) -> CliResult<ExperimentConfig> {
    resolve(common.config.as_deref(), &overrides(common))
}

fn format_flag(common: &Common) -> CliResult<Option<Format>> {
    common.format.as_deref().map(str::parse).transpose().map_err(CliError::from)
}

fn load_dataset(common: &Common, path: &Path) -> CliResult<EmbeddingDataset> {
    let format = match format_flag(common)? {
        Some(f) => f,
        None if path.extension().is_some_and(|e| e == "jsonl") => Format::Jsonl,
        None => Format::Binary,
    };
    Ok(read_dataset(path, format)?)
}

fn load_split(path: &Path, dataset: &EmbeddingDataset) -> CliResult<DatasetSplit> {
    let file: SplitFile = read_envelope(path)?;
    Ok(DatasetSplit::from_file(&file, dataset)?)
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Embedding width.
    #[arg(long)]
    dim: Option<usize>,
    /// Number of labels.
    #[arg(long)]
    labels: Option<usize>,
    /// Label-pure blobs.
    #[arg(long)]
    pure_blobs: Option<usize>,
    /// Label-balanced blobs.
    #[arg(long)]
    balanced_blobs: Option<usize>,
    /// Points per blob.
    #[arg(long)]
    blob_size: Option<usize>,
    /// Center coordinates lie in [-dispersion, dispersion].
    #[arg(long)]
    dispersion: Option<f64>,
    /// Blob standard deviation.
    #[arg(long)]
    std_dev: Option<f64>,
    /// Length of the per-label offset.
    #[arg(long)]
    label_signal: Option<f64>,
}

impl GenArgs {
    fn apply(&self, spec: &mut SyntheticSpec) {
        if let Some(d) = self.dim {
            spec.dim = d;
        }
        if let Some(l) = self.labels {
            spec.label_count = l;
        }
        if let Some(s) = self.label_signal {
            spec.label_signal = s;
        }
        let first = spec.blobs.first().cloned().unwrap_or(BlobSpec { dispersion: 1.0, std_dev: 0.05, size: 200, skew: 1.0 });
        if self.pure_blobs.is_some() || self.balanced_blobs.is_some() {
            let pure = self.pure_blobs.unwrap_or_else(|| spec.blobs.iter().filter(|b| b.skew == 1.0).count());
            let balanced = self.balanced_blobs.unwrap_or_else(|| spec.blobs.iter().filter(|b| b.skew < 1.0).count());
            let even = 1.0 / spec.label_count as f64;
            spec.blobs = std::iter::repeat_n(1.0, pure)
                .chain(std::iter::repeat_n(even.max(0.5), balanced))
                .map(|skew| BlobSpec { skew, ..first.clone() })
                .collect();
        }
        for b in &mut spec.blobs {
            b.size = self.blob_size.unwrap_or(b.size);
            b.dispersion = self.dispersion.unwrap_or(b.dispersion);
            b.std_dev = self.std_dev.unwrap_or(b.std_dev);
        }
    }
}

pub fn gen(common: &Common, args: &GenArgs) -> CliResult {
    let mut cfg = config(common)?;
    let mut spec = match cfg.synthetic.take() {
        Some(s) => s,
        None => parse_config(PLANTED_BIAS)?.synthetic.expect("bundled config has a synthetic spec"),
    };
    spec.seed = cfg.seed;
    args.apply(&mut spec);
    cfg.synthetic = Some(spec);
    cfg.validate()?;
    let format = format_flag(common)?.unwrap_or(Format::Jsonl);
    let (dataset, truth) = generate_synthetic(cfg.synthetic.as_ref().expect("set above"))?;
    let mut run = Run::new("gen", common, cfg)?;
    write_dataset(&dataset, run.path(&format!("dataset.{}", format.extension())), format)?;
    write_assignment_csv(run.path("truth.csv"), &dataset, &truth)?;
    run.finish()
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Ground-truth `id,cluster` CSV; adds an ARI to the summary.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterOutput {
    summary: ClusteringSummary,
    grouping: ClusterGrouping,
}

pub fn cluster(common: &Common, args: &ClusterArgs) -> CliResult {
    let cfg = config(common)?;
    let dataset = load_dataset(common, &args.dataset)?;
    let truth = args.truth.as_ref().map(|p| read_assignment_csv(p, &dataset)).transpose()?;
    let mut run = Run::new("cluster", common, cfg)?;
    run.input("dataset", &args.dataset);
    if let Some(t) = &args.truth {
        run.input("truth", t);
    }
    let prep = prepare(&dataset, &run.config, &run.seeds)?;
    write_assignment_csv(run.path("assignment.csv"), &dataset, &prep.assignment)?;
    let summary = prep.summary(truth.as_ref())?;
    run.envelope("grouping.json", ClusterOutput { summary, grouping: prep.grouping.clone() })?;
    run.envelope("split.json", prep.split.to_file(&dataset))?;
    run.finish()
}

#[derive(Debug, Args)]
pub struct HopkinsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Number of probes; defaults to the config, then to the size rule.
    #[arg(long)]
    probes: Option<usize>,
}

#[derive(Debug, Serialize)]
struct HopkinsRecord {
    records: usize,
    probes: usize,
    seed: u64,
    hopkins: f64,
}

pub fn hopkins(common: &Common, args: &HopkinsArgs) -> CliResult {
    let cfg = config(common)?;
    let dataset = load_dataset(common, &args.dataset)?;
    let mut run = Run::new("hopkins", common, cfg)?;
    run.input("dataset", &args.dataset);
    let x = dataset.matrix::<f64>();
    let probes = args.probes.or(run.config.train.hopkins_probes).unwrap_or_else(|| default_probes(x.rows()));
    let seed = run.seeds.hopkins;
    let value = hopkins_statistic(&x, probes, seed)?;
    run.envelope("hopkins.json", HopkinsRecord { records: x.rows(), probes, seed, hopkins: value })?;
    run.finish()
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `assignment.csv` from `cluster`.
    #[arg(long)]
    assignment: PathBuf,
    /// `grouping.json` from `cluster`.
    #[arg(long)]
    grouping: PathBuf,
}

pub fn mine(common: &Common, args: &MineArgs) -> CliResult {
    let cfg = config(common)?;
    let dataset = load_dataset(common, &args.dataset)?;
    let assignment: ClusterAssignment = read_assignment_csv(&args.assignment, &dataset)?;
    let grouping = read_envelope::<ClusterOutput>(&args.grouping)?.grouping;
    let mut run = Run::new("mine", common, cfg)?;
    run.input("dataset", &args.dataset);
    run.input("assignment", &args.assignment);
    run.input("grouping", &args.grouping);
    let seed = scissor::seed::derive_indexed(run.seeds.mining, "round", 0);
    let per_anchor = run.config.train.quadruplets_per_anchor;
    let (quads, report): (_, MiningReport) = mine_quadruplets(&dataset.labels(), &assignment, &grouping, per_anchor, seed)?;
    write_quadruplets_csv(run.path("quadruplets.csv"), &dataset, &quads)?;
    run.envelope("mining.json", report)?;
    run.finish()
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `split.json` from `cluster`.
    #[arg(long)]
    split: PathBuf,
}

pub fn train(common: &Common, args: &TrainArgs) -> CliResult {
    let cfg = config(common)?;
    let dataset = load_dataset(common, &args.dataset)?;
    let split = load_split(&args.split, &dataset)?;
    let mut run = Run::new("train", common, cfg)?;
    run.input("dataset", &args.dataset);
    run.input("split", &args.split);
    let (params, report): (_, TrainReport) = debias_split(&dataset, &split, &run.config, &run.seeds)?;
    write_checkpoint(&params, run.path("checkpoint.scic"))?;
    run.envelope("train_report.json", report)?;
    run.finish()
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `split.json` from `cluster`.
    #[arg(long)]
    split: PathBuf,
    /// Remap checkpoint; without it the raw embeddings are used.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

pub fn eval(common: &Common, args: &EvalArgs) -> CliResult {
    let cfg = config(common)?;
    let dataset = load_dataset(common, &args.dataset)?;
    let split = load_split(&args.split, &dataset)?;
    let params: Option<RemapParams<f64>> = args.checkpoint.as_ref().map(read_checkpoint).transpose()?;
    let mut run = Run::new("eval", common, cfg)?;
    run.input("dataset", &args.dataset);
    run.input("split", &args.split);
    if let Some(c) = &args.checkpoint {
        run.input("checkpoint", c);
    }
    let (_, evaluation): (_, HeadEvaluation) = fit_and_evaluate(&dataset, &split, params.as_ref(), &run.config.head, &run.seeds)?;
    let model = if params.is_some() { "scissor" } else { "baseline" };
    write_pr_csv(
        run.path("pr.csv"),
        &[(model, "id_test", &evaluation.eval.id_test), (model, "ood_test", &evaluation.eval.ood_test)],
    )?;
    let x = dataset.matrix::<f64>();
    let space = if params.is_some() { "remapped" } else { "raw" };
    pca_csv(&mut run, &dataset, &split, &x, &[(space, params.as_ref())])?;
    run.envelope("eval_report.json", evaluation)?;
    run.finish()
}

fn pca_csv(
    run: &mut Run,
    dataset: &EmbeddingDataset,
    split: &DatasetSplit,
    x: &Matrix<f64>,
    spaces: &[(&str, Option<&RemapParams<f64>>)],
) -> CliResult {
    let indices: Vec<usize> = split.train.iter().chain(&split.id_test).chain(&split.ood_test).copied().collect();
    let sets: Vec<&str> = std::iter::repeat_n("train", split.train.len())
        .chain(std::iter::repeat_n("id_test", split.id_test.len()))
        .chain(std::iter::repeat_n("ood_test", split.ood_test.len()))
        .collect();
    let raw = x.select_rows(&indices);
    let mut projected = Vec::new();
    for (name, params) in spaces {
        let features = match params {
            Some(p) => remap_matrix(p, &raw)?,
            None => raw.clone(),
        };
        projected.push((*name, pca_project(&features, 2.min(features.cols()))?.coords));
    }
    let rows: Vec<_> = projected.iter().map(|(n, c)| (*n, indices.as_slice(), sets.as_slice(), c)).collect();
    write_pca_csv(run.path("pca.csv"), dataset, &rows)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Dataset file; without it the config's synthetic spec is generated.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

pub fn experiment(common: &Common, args: &ExperimentArgs) -> CliResult {
    let cfg = config(common)?;
    let (dataset, truth) = match &args.dataset {
        Some(p) => (load_dataset(common, p)?, None),
        None => {
            let spec = cfg
                .synthetic
                .as_ref()
                .ok_or_else(|| CliError::Usage("pass --dataset or a config with a synthetic spec".into()))?;
            let (d, t) = generate_synthetic(spec)?;
            (d, Some(t))
        }
    };
    let mut run = Run::new("experiment", common, cfg)?;
    if let Some(p) = &args.dataset {
        run.input("dataset", p);
    }
    let outcome = run_experiment(&dataset, &run.config, truth.as_ref())?;
    let split = &outcome.preparation.split;
    write_assignment_csv(run.path("assignment.csv"), &dataset, &outcome.preparation.assignment)?;
    run.envelope("split.json", split.to_file(&dataset))?;
    write_checkpoint(&outcome.params, run.path("checkpoint.scic"))?;
    let r = &outcome.report;
    write_pr_csv(
        run.path("pr.csv"),
        &[
            ("baseline", "id_test", &r.baseline.eval.id_test),
            ("baseline", "ood_test", &r.baseline.eval.ood_test),
            ("scissor", "id_test", &r.scissor.eval.id_test),
            ("scissor", "ood_test", &r.scissor.eval.ood_test),
        ],
    )?;
    let x = dataset.matrix::<f64>();
    pca_csv(&mut run, &dataset, split, &x, &[("raw", None), ("remapped", Some(&outcome.params))])?;
    run.json("report.json", r)?;
    run.finish()
}
