use proptest::prelude::*;
use rand::Rng;
use scissor::remap::{
    adamw_step, adamw_update, batch_loss, batch_loss_and_grad, cosine_distance, forward, init_params, read_checkpoint,
    triplet_loss, write_checkpoint, AdamWConfig, Backend, OptimizerState, RemapConfig, RemapParams, Tensor,
};
use scissor::seed;

fn scalar_tensor(v: f64) -> Vec<Tensor<f64>> {
    vec![Tensor { shape: vec![1], data: vec![v] }]
}

#[test]
fn adamw_two_steps_by_hand() {
    let cfg = AdamWConfig { lr: 0.1, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 };
    let mut w = scalar_tensor(1.0);
    let mut state = OptimizerState::new(&w);
    adamw_update(&mut w, &scalar_tensor(0.5), &mut state, &cfg).unwrap();
    // m = 0.05, v = 2.5e-4, m_hat = 0.5, v_hat = 0.25
    let w1 = 1.0 - 0.1 * 0.01 * 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
    assert!((w[0].data[0] - w1).abs() < 1e-15);
    adamw_update(&mut w, &scalar_tensor(-0.25), &mut state, &cfg).unwrap();
    // m = 0.02, v = 3.1225e-4, m_hat = 0.02 / 0.19, v_hat = 3.1225e-4 / 1.999e-3
    let (mhat, vhat) = (0.02 / 0.19, 3.1225e-4 / 1.999e-3);
    let w2 = w1 - 0.1 * 0.01 * w1 - 0.1 * mhat / (f64::sqrt(vhat) + 1e-8);
    assert!((w[0].data[0] - w2).abs() < 1e-12, "{} vs {w2}", w[0].data[0]);
    assert_eq!(state.step, 2);
}

#[test]
fn zero_gradient_applies_only_decay() {
    let cfg = AdamWConfig { lr: 0.1, weight_decay: 0.01, ..AdamWConfig::default() };
    let mut w = scalar_tensor(1.0);
    let mut state = OptimizerState::new(&w);
    adamw_update(&mut w, &scalar_tensor(0.0), &mut state, &cfg).unwrap();
    assert!((w[0].data[0] - 0.999).abs() < 1e-15);
}

#[test]
fn adamw_rejects_mismatched_and_non_finite_gradients() {
    let cfg = AdamWConfig::default();
    let mut w = scalar_tensor(1.0);
    let mut state = OptimizerState::new(&w);
    assert!(adamw_update(&mut w, &scalar_tensor(f64::NAN), &mut state, &cfg).is_err());
    let wrong = vec![Tensor { shape: vec![2], data: vec![0.0, 0.0] }];
    assert!(adamw_update(&mut w, &wrong, &mut state, &cfg).is_err());
    assert_eq!(state.step, 0);
}

fn gelu(v: f64) -> f64 {
    0.5 * v * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (v + 0.044715 * v.powi(3))).tanh())
}

fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    x.iter().zip(gain).zip(bias).map(|((v, g), b)| g * (v - mean) / (var + 1e-5).sqrt() + b).collect()
}

/// `x W` for row-major `W` of shape `rows x cols`.
fn vec_mat(x: &[f64], w: &[f64], cols: usize) -> Vec<f64> {
    (0..cols).map(|j| x.iter().enumerate().map(|(i, v)| v * w[i * cols + j]).sum()).collect()
}

fn randomize(p: &mut RemapParams<f64>, s: u64) {
    let mut rng = seed::rng(s);
    for t in &mut p.tensors {
        t.data.iter_mut().for_each(|v| *v = rng.random_range(-0.8..0.8));
    }
}

#[test]
fn mlp_forward_matches_closed_form() {
    let cfg = RemapConfig { backend: Backend::Mlp, hidden: 5, mlp_layers: 1, ..RemapConfig::default() };
    let mut p = init_params::<f64>(4, &cfg, 2).unwrap();
    randomize(&mut p, 9);
    let x = [0.3, -1.2, 0.8, 2.0];
    let t = &p.tensors;
    let h: Vec<f64> = vec_mat(&x, &t[0].data, 5).iter().zip(&t[1].data).map(|(a, b)| (a + b).tanh()).collect();
    let want: Vec<f64> = vec_mat(&h, &t[2].data, 4).iter().zip(&t[3].data).zip(&x).map(|((a, b), xi)| a + b + xi).collect();
    let (z, _) = forward(&p, &x).unwrap();
    for (a, b) in z.iter().zip(&want) {
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn single_token_attention_matches_closed_form() {
    // with one token the softmax weight is 1, so each head contributes x V_h O_h
    let cfg = RemapConfig { backend: Backend::Attention, heads: 2, hidden: 6, segments: 1, mlp_layers: 1 };
    let mut p = init_params::<f64>(4, &cfg, 3).unwrap();
    randomize(&mut p, 10);
    let t = &p.tensors;
    let (d, dh) = (4, 2);
    let x = [0.5, -0.1, 0.9, -1.3];
    let mut a = t[4].data.clone();
    for h in 0..2 {
        let v = vec_mat(&x, &t[2].data[h * d * dh..(h + 1) * d * dh], dh);
        let o = vec_mat(&v, &t[3].data[h * dh * d..(h + 1) * dh * d], d);
        a.iter_mut().zip(o).for_each(|(s, o)| *s += o);
    }
    let r1: Vec<f64> = x.iter().zip(&a).map(|(x, a)| x + a).collect();
    let z1 = layer_norm(&r1, &t[5].data, &t[6].data);
    let hidden: Vec<f64> = vec_mat(&z1, &t[7].data, 6).iter().zip(&t[8].data).map(|(v, b)| gelu(v + b)).collect();
    let f: Vec<f64> = vec_mat(&hidden, &t[9].data, d).iter().zip(&t[10].data).map(|(v, b)| v + b).collect();
    let r2: Vec<f64> = z1.iter().zip(&f).map(|(a, b)| a + b).collect();
    let want = layer_norm(&r2, &t[11].data, &t[12].data);
    let (z, _) = forward(&p, &x).unwrap();
    for (a, b) in z.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn attention_with_zero_projections_is_tokenwise_norm() {
    // zero output and second FFN weights leave LN2(LN1(x + ob) + b2) per token
    let cfg = RemapConfig { backend: Backend::Attention, heads: 2, hidden: 8, segments: 3, mlp_layers: 1 };
    let mut p = init_params::<f64>(12, &cfg, 4).unwrap();
    randomize(&mut p, 11);
    p.tensors[3].data.iter_mut().for_each(|v| *v = 0.0);
    p.tensors[9].data.iter_mut().for_each(|v| *v = 0.0);
    let t = p.tensors.clone();
    let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
    let (z, _) = forward(&p, &x).unwrap();
    for s in 0..3 {
        let tok = &x[4 * s..4 * s + 4];
        let r1: Vec<f64> = tok.iter().zip(&t[4].data).map(|(a, b)| a + b).collect();
        let z1 = layer_norm(&r1, &t[5].data, &t[6].data);
        let r2: Vec<f64> = z1.iter().zip(&t[10].data).map(|(a, b)| a + b).collect();
        let want = layer_norm(&r2, &t[11].data, &t[12].data);
        for (a, b) in z[4 * s..4 * s + 4].iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for (i, cfg) in [
        RemapConfig { backend: Backend::Mlp, hidden: 7, mlp_layers: 2, ..RemapConfig::default() },
        RemapConfig { backend: Backend::Attention, heads: 2, hidden: 5, segments: 2, mlp_layers: 1 },
    ]
    .into_iter()
    .enumerate()
    {
        let mut p = init_params::<f64>(8, &cfg, 5).unwrap();
        randomize(&mut p, 12 + i as u64);
        p.tensors[0].data[0] = 1.0 / 3.0;
        p.tensors[0].data[1] = -f64::MIN_POSITIVE;
        let path = dir.path().join(format!("c{i}.scic"));
        write_checkpoint(&p, &path).unwrap();
        let back: RemapParams<f64> = read_checkpoint(&path).unwrap();
        assert_eq!(back.config, p.config);
        for (a, b) in back.tensors.iter().zip(&p.tensors) {
            assert_eq!(a.shape, b.shape);
            assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        // f32 checkpoints refuse to load as f64
        assert!(read_checkpoint::<f32>(&path).is_err());
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_checkpoint::<f64>(&path).is_err());
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_checkpoint::<f64>(&path).is_err());
    }
}

#[test]
fn training_steps_lower_batch_loss() {
    let cfg = RemapConfig { backend: Backend::Mlp, hidden: 16, mlp_layers: 1, ..RemapConfig::default() };
    let mut p = init_params::<f64>(6, &cfg, 8).unwrap();
    let mut rng = seed::rng(21);
    let vecs: Vec<[Vec<f64>; 3]> =
        (0..8).map(|_| std::array::from_fn(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
    let batch: Vec<[&[f64]; 3]> = vecs.iter().map(|t| [&t[0][..], &t[1][..], &t[2][..]]).collect();
    let opt = AdamWConfig { lr: 1e-2, ..AdamWConfig::default() };
    let mut state = OptimizerState::new(&p.tensors);
    let first = batch_loss(&p, &batch, 0.2).unwrap();
    for _ in 0..50 {
        let (_, g) = batch_loss_and_grad(&p, &batch, 0.2).unwrap();
        adamw_step(&mut p, &g, &mut state, &opt).unwrap();
    }
    let last = batch_loss(&p, &batch, 0.2).unwrap();
    assert!(last < 0.5 * first, "{first} -> {last}");
}

fn nonzero_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n).prop_filter("norm away from 0", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

proptest! {
    #[test]
    fn triplet_loss_is_scale_invariant(
        a in nonzero_vec(5), p in nonzero_vec(5), n in nonzero_vec(5),
        sa in 0.1f64..10.0, sp in 0.1f64..10.0, sn in 0.1f64..10.0, beta in 0.0f64..1.0,
    ) {
        let scale = |v: &[f64], s: f64| v.iter().map(|x| x * s).collect::<Vec<_>>();
        let l0 = triplet_loss(&a, &p, &n, beta).unwrap().loss;
        let l1 = triplet_loss(&scale(&a, sa), &scale(&p, sp), &scale(&n, sn), beta).unwrap().loss;
        prop_assert!((l0 - l1).abs() < 1e-9);
        prop_assert!(l0 >= 0.0);
        let direct = (cosine_distance(&a, &p) - cosine_distance(&a, &n) + beta).max(0.0);
        prop_assert!((l0 - direct).abs() < 1e-12);
    }

    #[test]
    fn cosine_distance_lies_in_zero_two(a in nonzero_vec(4), b in nonzero_vec(4)) {
        let d = cosine_distance(&a, &b);
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&d));
        prop_assert!((d - cosine_distance(&b, &a)).abs() < 1e-15);
    }
}
