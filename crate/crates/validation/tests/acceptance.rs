//! Acceptance criteria 1-10, one verdict line each. Exits non-zero if any fails.

use std::time::Instant;

use rand::Rng;
use scissor::cluster::{build_markov_matrix, mcl_observed, MarkovMatrix, MclParams};
use scissor::linalg::Matrix;
use scissor::metrics::hopkins;
use scissor::pipeline::{ClusteringBackend, StopReason};
use scissor::remap::{grad_check, lemma1_probe, random_close_pair, Backend, RemapConfig, TwoLayerScalarNet};
use scissor::seed;
use scissor_validation::{mean, run_planted, BenchmarkRun, SEEDS};

struct Verdicts(Vec<(usize, bool)>);

impl Verdicts {
    fn record(&mut self, n: usize, pass: bool, detail: String) {
        println!("criterion {n:>2}: {}  {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push((n, pass));
    }
}

fn runs(backend: ClusteringBackend) -> Vec<BenchmarkRun> {
    SEEDS.iter().map(|&s| run_planted(s, backend).expect("benchmark run")).collect()
}

fn fmt(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
}

fn gap_reduction(runs: &[BenchmarkRun]) -> f64 {
    let base = mean(runs.iter().map(|r| r.report.baseline.eval.gap));
    let sc = mean(runs.iter().map(|r| r.report.scissor.eval.gap));
    (base - sc) / base
}

fn ood(runs: &[BenchmarkRun], scissor: bool) -> f64 {
    mean(runs.iter().map(|r| if scissor { &r.report.scissor } else { &r.report.baseline }.eval.ood_test.accuracy))
}

fn criterion_1(v: &mut Verdicts, mcl: &[BenchmarkRun]) {
    let gaps: Vec<f64> = mcl.iter().map(|r| r.report.baseline.eval.gap).collect();
    let slowest = mcl.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let gap = mean(gaps.iter().copied());
    v.record(1, gap >= 0.15 && slowest < 120.0, format!(
        "baseline ID-OOD gap mean {gap:.3} (need >= 0.150; per seed {}), slowest seed {slowest:.1} s (need < 120 s)",
        fmt(gaps)
    ));
}

fn criterion_2(v: &mut Verdicts, mcl: &[BenchmarkRun]) {
    let reduction = gap_reduction(mcl);
    let gain = ood(mcl, true) - ood(mcl, false);
    let auc_base = mean(mcl.iter().map(|r| r.report.baseline.eval.ood_test.pr_auc));
    let auc_sc = mean(mcl.iter().map(|r| r.report.scissor.eval.ood_test.pr_auc));
    v.record(2, reduction >= 0.5 && gain >= 0.05 && auc_sc >= auc_base, format!(
        "gap reduction {:.1}% (need >= 50%), OOD accuracy {:+.3} (need >= +0.050), OOD PR AUC {auc_sc:.3} vs baseline {auc_base:.3}",
        100.0 * reduction, gain
    ));
}

fn criterion_3(v: &mut Verdicts) {
    let uniform: Vec<f64> = (0..20u64)
        .map(|s| {
            let mut rng = seed::rng(seed::derive_indexed(7, "uniform", s));
            let x = Matrix::from_vec(1000, 8, (0..8000).map(|_| rng.random::<f64>()).collect()).unwrap();
            hopkins(&x, 100, seed::derive_indexed(7, "probes", s)).unwrap()
        })
        .collect();
    let mean_uniform = mean(uniform.iter().copied());
    let blobs: Vec<f64> = (0..5u64)
        .map(|s| {
            let mut rng = seed::rng(seed::derive_indexed(7, "blobs", s));
            let mut data = Vec::with_capacity(1000 * 8);
            for i in 0..1000 {
                let center = if i < 500 { 0.2 } else { 0.8 };
                data.extend((0..8).map(|_| center + rng.random_range(-0.005..0.005)));
            }
            hopkins(&Matrix::from_vec(1000, 8, data).unwrap(), 100, s).unwrap()
        })
        .collect();
    let worst_blob = blobs.iter().copied().fold(0.0, f64::max);
    v.record(3, (0.45..=0.55).contains(&mean_uniform) && worst_blob < 0.1, format!(
        "uniform [0,1]^8 mean H {mean_uniform:.3} over 20 seeds (need in [0.45, 0.55]), two tight blobs max H {worst_blob:.4} (need < 0.1)"
    ));
}

fn criterion_4(v: &mut Verdicts, mcl: &[BenchmarkRun]) {
    let converged: Vec<&BenchmarkRun> =
        mcl.iter().filter(|r| r.report.train.stop_reason == StopReason::HopkinsConverged).collect();
    let in_band = converged.iter().all(|r| {
        let h = *r.report.train.hopkins_trajectory.last().unwrap();
        (0.4..=0.6).contains(&h)
    });
    let rising = mcl
        .iter()
        .filter(|r| {
            let t = &r.report.train.hopkins_trajectory;
            t.last() >= t.first()
        })
        .count();
    let traj = mcl
        .iter()
        .map(|r| {
            let t = &r.report.train.hopkins_trajectory;
            format!("{:.3}->{:.3} ({})", t[0], t[t.len() - 1], r.report.train.stop_reason.as_str())
        })
        .collect::<Vec<_>>()
        .join(", ");
    v.record(4, in_band && rising >= 4, format!(
        "{} of 5 runs stopped on Hopkins, final H in [0.4, 0.6] for those: {in_band}; last >= first in {rising} of 5 seeds (need >= 4); {traj}",
        converged.len()
    ));
}

/// Components of the graph with an edge wherever `w[(i, j)] > 0`.
fn components(w: &Matrix<f64>) -> Vec<usize> {
    let n = w.rows();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if label[j] == usize::MAX && (w[(i, j)] > 0.0 || w[(j, i)] > 0.0) {
                    label[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    label
}

fn criterion_5(v: &mut Verdicts) {
    let mut rng = seed::rng(seed::derive(5, "block-graphs"));
    let (mut exact, mut invariant_ok, mut iterations) = (0, true, 0);
    for g in 0..50u64 {
        let blocks = rng.random_range(2..=5usize);
        let n = rng.random_range(blocks * 4..=200usize);
        // shuffled block labels, so blocks are not contiguous index ranges
        let mut block_of: Vec<usize> = (0..n).map(|i| i % blocks).collect();
        for i in (1..n).rev() {
            block_of.swap(i, rng.random_range(0..=i));
        }
        // nonnegative vectors on disjoint coordinate ranges: cosine > 0 inside a block, 0 across
        let width = 4;
        let mut x = Matrix::zeros(n, blocks * width);
        for i in 0..n {
            for c in 0..width {
                x[(i, block_of[i] * width + c)] = rng.random_range(0.1..1.0);
            }
        }
        let m: MarkovMatrix<f64> = build_markov_matrix(&x, None, 1.0).unwrap();
        let truth = components(m.matrix());
        let out = mcl_observed(&m, &MclParams::default(), |_, flow| {
            let dense = flow.to_dense();
            let nonneg = dense.as_slice().iter().all(|&v| v >= 0.0);
            let stochastic = flow.column_sums().iter().all(|s| (s - 1.0).abs() <= 1e-9);
            invariant_ok &= nonneg && stochastic;
        })
        .unwrap();
        iterations += out.iterations;
        let want = scissor::cluster::ClusterAssignment::from_raw_labels(&truth).canonical();
        if out.converged && out.assignment.canonical() == want {
            exact += 1;
        } else {
            println!("    graph {g}: n = {n}, {blocks} blocks, MCL found {} clusters", out.assignment.cluster_count());
        }
    }
    v.record(5, exact == 50 && invariant_ok, format!(
        "MCL equals connected components on {exact}/50 block graphs (n <= 200, 2-5 blocks); nonnegative and column-stochastic within 1e-9 at all {iterations} iterations: {invariant_ok}"
    ));
}

fn criterion_6(v: &mut Verdicts) {
    let start = Instant::now();
    let mlp = RemapConfig { backend: Backend::Mlp, hidden: 32, mlp_layers: 2, ..RemapConfig::default() };
    let attention = RemapConfig { backend: Backend::Attention, heads: 2, hidden: 16, segments: 4, ..RemapConfig::default() };
    let a = grad_check(32, &mlp, 100, 61).unwrap();
    let b = grad_check(32, &attention, 100, 62).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let worst = a.max_relative_error.max(b.max_relative_error);
    v.record(6, worst <= 1e-4 && secs < 60.0, format!(
        "max relative gradient error mlp {:.2e} ({} params), attention {:.2e} ({} params), 100 trials each at u = 32 (need <= 1e-4); {secs:.1} s (need < 60 s)",
        a.max_relative_error, a.parameters, b.max_relative_error, b.parameters
    ));
}

fn criterion_7(v: &mut Verdicts) {
    let mut rng = seed::rng(seed::derive(7, "lemma"));
    let (dim, alpha) = (8, 0.1);
    let mut holds = 0;
    let mut tightest = 0.0f64;
    for _ in 0..1000 {
        let f = TwoLayerScalarNet::<f64>::random(dim, 16, &mut rng);
        let (x, xp) = random_close_pair(dim, alpha, &mut rng);
        let p = lemma1_probe(&f, &x, &xp, alpha).unwrap();
        holds += usize::from(p.holds);
        tightest = tightest.max(p.lhs / p.bound);
    }
    v.record(7, holds == 1000, format!(
        "smoothness bound held on {holds}/1000 close pairs (alpha = 0.1, u = 8, 16 tanh units); largest lhs/bound {tightest:.3}"
    ));
}

fn criterion_8(v: &mut Verdicts, mcl: &[BenchmarkRun], kmeans: &[BenchmarkRun]) {
    let diff = (ood(kmeans, true) - ood(mcl, true)).abs();
    let reduction = gap_reduction(kmeans);
    v.record(8, diff <= 0.03 && reduction >= 0.5, format!(
        "k-means OOD accuracy {:.3} vs MCL {:.3}, |diff| {diff:.3} (need <= 0.030); k-means gap reduction {:.1}% (need >= 50%)",
        ood(kmeans, true), ood(mcl, true), 100.0 * reduction
    ));
}

fn criterion_9(v: &mut Verdicts, mcl: &[BenchmarkRun]) {
    let d: Vec<f64> = mcl.iter().map(|r| r.report.delta_theta).collect();
    let positive = d.iter().filter(|&&x| x > 0.0).count();
    v.record(9, positive >= 4, format!("delta theta on the OOD set positive in {positive}/5 seeds (need >= 4): {}", fmt(d)));
}

fn criterion_10(v: &mut Verdicts, mcl: &[BenchmarkRun]) {
    let again = run_planted(SEEDS[0], ClusteringBackend::Mcl).unwrap();
    let a = serde_json::to_string_pretty(&mcl[0].report).unwrap();
    let b = serde_json::to_string_pretty(&again.report).unwrap();
    v.record(10, a == b, format!("repeated seed-{} experiment gives byte-identical JSON ({} bytes): {}", SEEDS[0], a.len(), a == b));
}

/// Stopping-rule example outside the numbered list: four blobs, two label-pure, up to 50 rounds.
fn example_hopkins_convergence(v: &mut Verdicts) {
    let mut finals = Vec::new();
    for &s in &SEEDS {
        let mut cfg = scissor_validation::planted_bias_config(s, ClusteringBackend::Mcl);
        let spec = cfg.synthetic.as_mut().unwrap();
        spec.blobs.truncate(4);
        cfg.train.max_rounds = 50;
        let (ds, _) = scissor::pipeline::synthetic_dataset(&cfg).unwrap();
        finals.push(match scissor::pipeline::run_experiment(&ds, &cfg, None) {
            Ok(out) => {
                let t = &out.report.train;
                let h = *t.hopkins_trajectory.last().unwrap();
                (Some(h), format!("{h:.3} after {} rounds", t.rounds_executed))
            }
            Err(e) => (None, format!("error: {e}")),
        });
    }
    let eps = 0.1;
    let inside = finals.iter().filter(|(h, _)| h.is_some_and(|h| (h - 0.5).abs() <= eps)).count();
    let detail: Vec<String> = finals.into_iter().map(|(_, d)| d).collect();
    println!(
        "example    : {}  4-blob run, final Hopkins within 0.5 +/- {eps} in {inside}/5 seeds (need 5): {}",
        if inside == 5 { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    v.0.push((0, inside == 5));
}

fn main() {
    let mut v = Verdicts(Vec::new());
    criterion_3(&mut v);
    criterion_5(&mut v);
    criterion_6(&mut v);
    criterion_7(&mut v);
    let mcl = runs(ClusteringBackend::Mcl);
    let kmeans = runs(ClusteringBackend::Kmeans);
    criterion_1(&mut v, &mcl);
    criterion_2(&mut v, &mcl);
    criterion_4(&mut v, &mcl);
    criterion_8(&mut v, &mcl, &kmeans);
    criterion_9(&mut v, &mcl);
    criterion_10(&mut v, &mcl);
    example_hopkins_convergence(&mut v);
    v.0.sort();
    let (criteria, examples): (Vec<_>, Vec<_>) = v.0.iter().partition(|(n, _)| *n > 0);
    let failed: Vec<String> = criteria.iter().filter(|(_, p)| !p).map(|(n, _)| n.to_string()).collect();
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed.len(), criteria.len());
    let failed_examples = examples.iter().filter(|(_, p)| !p).count();
    if !failed.is_empty() {
        println!("acceptance: failed criteria {}", failed.join(", "));
    }
    if !failed.is_empty() || failed_examples > 0 {
        std::process::exit(1);
    }
}
