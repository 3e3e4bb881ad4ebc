use rand::Rng;
use rand_distr::StandardNormal;

use super::{batch_loss, batch_loss_and_grad, init_params, RemapConfig, RemapParams};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `|g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|)` over all parameters, worst trial.
    pub max_relative_error: f64,
    pub max_abs_error: f64,
    pub trials: usize,
    pub parameters: usize,
}

/// Central-difference check of the analytic gradient for one batch.
pub fn check_batch(params: &RemapParams<f64>, batch: &[[&[f64]; 3]], beta: f64, h: f64) -> Result<(f64, f64)> {
    let (_, analytic) = batch_loss_and_grad(params, batch, beta)?;
    let mut probe = params.clone();
    let (mut diff2, mut an2, mut num2, mut max_abs) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for ti in 0..params.tensors.len() {
        for i in 0..params.tensors[ti].data.len() {
            let w = params.tensors[ti].data[i];
            probe.tensors[ti].data[i] = w + h;
            let up = batch_loss(&probe, batch, beta)?;
            probe.tensors[ti].data[i] = w - h;
            let down = batch_loss(&probe, batch, beta)?;
            probe.tensors[ti].data[i] = w;
            let num = (up - down) / (2.0 * h);
            let an = analytic[ti].data[i];
            diff2 += (an - num).powi(2);
            an2 += an * an;
            num2 += num * num;
            max_abs = max_abs.max((an - num).abs());
        }
    }
    let denom = an2.sqrt().max(num2.sqrt());
    Ok((if denom == 0.0 { 0.0 } else { diff2.sqrt() / denom }, max_abs))
}

/// Random parameters and random triplets with every hinge active, `trials` times.
pub fn grad_check(dim: usize, config: &RemapConfig, trials: usize, seed: u64) -> Result<GradCheckReport> {
    let beta = 0.2;
    let h = 1e-5;
    let mut rng = seed::rng(seed::derive(seed, "grad-check"));
    let mut report = GradCheckReport { max_relative_error: 0.0, max_abs_error: 0.0, trials, parameters: 0 };
    for trial in 0..trials {
        let mut params = init_params::<f64>(dim, config, seed::derive_indexed(seed, "grad-check-init", trial as u64))?;
        // move gains and biases off their initial values so their gradients are generic
        for t in &mut params.tensors {
            for v in &mut t.data {
                *v += 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        report.parameters = params.parameter_count();
        let mut vectors = Vec::new();
        for _ in 0..1000 {
            let triple: [Vec<f64>; 3] =
                std::array::from_fn(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect());
            let refs = [triple[0].as_slice(), triple[1].as_slice(), triple[2].as_slice()];
            // keep well clear of the hinge kink so differences stay smooth
            if batch_loss(&params, &[refs], beta)? > 1e-2 {
                vectors.push(triple);
                if vectors.len() == 2 {
                    break;
                }
            }
        }
        if vectors.len() < 2 {
            return Err(Error::InvalidArgument("could not draw active triplets".into()));
        }
        let batch: Vec<[&[f64]; 3]> =
            vectors.iter().map(|t| [t[0].as_slice(), t[1].as_slice(), t[2].as_slice()]).collect();
        let (rel, abs) = check_batch(&params, &batch, beta, h)?;
        report.max_relative_error = report.max_relative_error.max(rel);
        report.max_abs_error = report.max_abs_error.max(abs);
    }
    Ok(report)
}
