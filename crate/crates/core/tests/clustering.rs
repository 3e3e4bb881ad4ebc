use proptest::prelude::*;
use scissor::cluster::{
    build_markov_matrix, downsample_groups, kmeans, label_imbalance, mcl, mcl_observed, ClusterAssignment, GroupFlag,
    KMeansParams, MarkovMatrix, MclParams,
};
use scissor::linalg::Matrix;
use scissor::metrics::ari;

/// Block-structured weights: dense positive inside each block, zero across.
fn block_weights(sizes: &[usize], weights: &[f64]) -> (Matrix<f64>, Vec<usize>) {
    let n: usize = sizes.iter().sum();
    let mut block = Vec::with_capacity(n);
    for (b, &s) in sizes.iter().enumerate() {
        block.extend(std::iter::repeat_n(b, s));
    }
    let mut w = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if block[i] == block[j] {
                let v = if i == j { 1.0 } else { weights[k % weights.len()] };
                k += 1;
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    (w, block)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mcl_recovers_dense_blocks(
        sizes in prop::collection::vec(2usize..12, 2..5),
        weights in prop::collection::vec(0.5f64..1.0, 1..40),
    ) {
        let (w, block) = block_weights(&sizes, &weights);
        let m = MarkovMatrix::from_weights(w).unwrap();
        let out = mcl(&m, &MclParams::default()).unwrap();
        prop_assert!(out.converged);
        prop_assert_eq!(out.assignment.canonical(), ClusterAssignment::from_raw_labels(&block).canonical());
    }

    #[test]
    fn flow_stays_column_stochastic(rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 3..30)) {
        let x = Matrix::from_rows(&rows.iter().map(|r| [r[0] + 0.01, r[1], r[2]]).collect::<Vec<_>>()).unwrap();
        let m = build_markov_matrix(&x, None, 1.0).unwrap();
        let mut ok = true;
        mcl_observed(&m, &MclParams::default(), |_, flow| {
            ok &= flow.min_entry() >= 0.0;
            ok &= flow.column_sums().iter().all(|s| (s - 1.0).abs() <= 1e-9);
        }).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn markov_matrix_is_column_stochastic(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 2..25),
        top_k in prop::option::of(1usize..6),
    ) {
        let rows: Vec<[f64; 4]> = rows.iter().map(|r| [r[0] + 2.0, r[1], r[2], r[3]]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = build_markov_matrix(&x, top_k, 1.0).unwrap();
        let n = m.n();
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| m.matrix()[(i, j)]).collect();
            prop_assert!(col.iter().all(|&v| v >= 0.0));
            prop_assert!((col.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            if let Some(k) = top_k {
                prop_assert!(col.iter().filter(|&&v| v > 0.0).count() <= k.max(1));
            }
        }
    }

    #[test]
    fn kmeans_inertia_never_increases(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..40),
        k in 2usize..5,
        seed in 0u64..1000,
    ) {
        let x = Matrix::from_rows(&rows).unwrap();
        let out = kmeans(&x, &KMeansParams { k, ..KMeansParams::default() }, seed).unwrap();
        for w in out.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        prop_assert_eq!(out.assignment.len(), rows.len());
    }

    #[test]
    fn ari_is_symmetric_and_label_invariant(
        a in prop::collection::vec(0usize..4, 2..40),
        seed in prop::collection::vec(0usize..4, 40),
    ) {
        let b: Vec<usize> = (0..a.len()).map(|i| seed[i]).collect();
        let (pa, pb) = (ClusterAssignment::from_raw_labels(&a), ClusterAssignment::from_raw_labels(&b));
        let relabeled = ClusterAssignment::from_raw_labels(&a.iter().map(|&c| 10 - c).collect::<Vec<_>>());
        let ab = ari(&pa, &pb).unwrap();
        prop_assert!((ab - ari(&pb, &pa).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= 1.0 + 1e-12);
        prop_assert!((ari(&pa, &relabeled).unwrap() - 1.0).abs() < 1e-12 || pa.cluster_count() == 1);
    }

    #[test]
    fn downsampled_groups_are_equal_and_label_balanced(
        labels in prop::collection::vec(0i32..2, 80),
        seed in 0u64..500,
    ) {
        // clusters 0 and 1 forced pure, clusters 2 and 3 keep the random labels
        let cluster_of: Vec<usize> = (0..80).map(|i| i % 4).collect();
        let labels: Vec<i32> = labels.iter().enumerate().map(|(i, &l)| if i % 4 < 2 { (i % 4) as i32 } else { l }).collect();
        let assignment = ClusterAssignment::new(cluster_of).unwrap();
        let grouping = label_imbalance(&assignment, &labels, 0.8, 5).unwrap();
        prop_assume!(grouping.flags[2] == GroupFlag::Balanced && grouping.flags[3] == GroupFlag::Balanced);
        match downsample_groups(&grouping, &assignment, &labels, &[0, 1], seed) {
            Ok(g) => {
                let m = g.members.unwrap();
                prop_assert_eq!(m.imbalanced.len(), m.balanced.len());
                for group in [&m.imbalanced, &m.balanced] {
                    let ones = group.iter().filter(|&&i| labels[i] == 1).count();
                    prop_assert_eq!(2 * ones, group.len());
                    prop_assert!(group.windows(2).all(|w| w[0] < w[1]));
                }
            }
            Err(e) => {
                let missing = matches!(e, scissor::Error::MissingLabel { .. });
                prop_assert!(missing);
            }
        }
    }
}

fn sse(x: &Matrix<f64>, labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..x.rows()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            return f64::INFINITY;
        }
        let center: Vec<f64> =
            (0..x.cols()).map(|d| members.iter().map(|&i| x[(i, d)]).sum::<f64>() / members.len() as f64).collect();
        for &i in &members {
            total += x.row(i).iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    total
}

#[test]
fn kmeans_matches_brute_force_two_partition() {
    use rand::Rng;
    for s in 0..10u64 {
        let mut rng = scissor::seed::rng(s);
        let rows: Vec<[f64; 2]> = (0..12)
            .map(|i| {
                let c = if i < 6 { -2.0 } else { 2.0 };
                [c + rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        // point 11 pinned to cluster 1 removes label symmetry
        let best = (0u32..(1 << 11))
            .map(|mask| {
                let labels: Vec<usize> = (0..12).map(|i| if i == 11 { 1 } else { ((mask >> i) & 1) as usize }).collect();
                sse(&x, &labels, 2)
            })
            .fold(f64::INFINITY, f64::min);
        let out = kmeans(&x, &KMeansParams { k: 2, ..KMeansParams::default() }, s).unwrap();
        let got = sse(&x, out.assignment.cluster_of(), 2);
        assert!((got - best).abs() <= 1e-9 * best, "seed {s}: k-means {got} vs optimum {best}");
        assert!((out.inertia() - got).abs() <= 1e-9 * got);
    }
}

#[test]
fn identical_vectors_form_one_cluster() {
    let x = Matrix::from_rows(&[[1.0f64, 2.0], [1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
    let out = mcl(&build_markov_matrix(&x, None, 1.0).unwrap(), &MclParams::default()).unwrap();
    assert_eq!(out.assignment.cluster_count(), 1);
}

#[test]
fn orthogonal_groups_split_exactly() {
    let mut rows = Vec::new();
    for g in 0..3 {
        for i in 0..5 {
            let mut r = [0.0f64; 6];
            r[2 * g] = 1.0;
            r[2 * g + 1] = 0.1 * i as f64;
            rows.push(r);
        }
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let out = mcl(&build_markov_matrix(&x, None, 1.0).unwrap(), &MclParams::default()).unwrap();
    let want: Vec<usize> = (0..15).map(|i| i / 5).collect();
    assert_eq!(out.assignment.canonical().cluster_of(), want.as_slice());
}

#[test]
fn ari_of_known_contingency() {
    // pair counts: index 1, expected 2 * 1 / 6, max (2 + 1) / 2, so (1 - 1/3) / (3/2 - 1/3) = 4/7
    let a = ClusterAssignment::new(vec![0, 0, 1, 1]).unwrap();
    let b = ClusterAssignment::new(vec![0, 0, 1, 2]).unwrap();
    assert!((ari(&a, &b).unwrap() - 4.0 / 7.0).abs() < 1e-12);
}
