//! Central finite-difference verification of the analytic gradients.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::network::{init_params, ModelParams, ModelSpec};
use crate::rng::{self, Stream};
use crate::tensor::Tensor;
use crate::training::batch_loss_and_grad;
use crate::welldata::NUM_FACIES;

/// Largest acceptable relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Default perturbation.
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, so that parameters whose true
/// gradient is ~0 are judged by the absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `name[flat index]` of the worst parameter.
    pub worst_param: String,
    pub analytic: f64,
    pub numeric: f64,
    /// Number of scalar parameters perturbed.
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < GRADCHECK_TOLERANCE
    }
}

/// Perturbs every parameter by ±`h` and compares `(L(+h) - L(-h)) / 2h` to
/// the analytic gradient of the mean cross-entropy over `batch`. Dropout is
/// active with masks drawn from `stream`, identical on every evaluation.
pub fn finite_diff_check(
    spec: &ModelSpec,
    params: &ModelParams<f64>,
    batch: &[(Tensor<f64>, u8)],
    h: f64,
    stream: Stream,
) -> Result<GradCheckReport> {
    finite_diff_check_with(spec, params, batch, h, stream, |_| {})
}

/// As [`finite_diff_check`], but lets the caller alter the analytic
/// gradients before comparison (fault injection).
pub fn finite_diff_check_with(
    spec: &ModelSpec,
    params: &ModelParams<f64>,
    batch: &[(Tensor<f64>, u8)],
    h: f64,
    stream: Stream,
    tamper: impl Fn(&mut ModelParams<f64>),
) -> Result<GradCheckReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!(
            "finite-difference step {h} must be > 0"
        )));
    }
    let refs: Vec<(&Tensor<f64>, u8)> = batch.iter().map(|(x, y)| (x, *y)).collect();
    let loss = |p: &ModelParams<f64>| -> Result<f64> {
        Ok(batch_loss_and_grad(spec, p, &refs, None, true, stream)?.loss)
    };
    let mut analytic = batch_loss_and_grad(spec, params, &refs, None, true, stream)?.grads;
    tamper(&mut analytic);

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_param: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for (t, name) in params.names.iter().enumerate() {
        for j in 0..params.tensors[t].len() {
            let orig = params.tensors[t].data()[j];
            probe.tensors[t].data_mut()[j] = orig + h;
            let up = loss(&probe)?;
            probe.tensors[t].data_mut()[j] = orig - h;
            let down = loss(&probe)?;
            probe.tensors[t].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.tensors[t].data()[j];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_relative_error || report.worst_param.is_empty() {
                report.max_relative_error = err;
                report.worst_param = format!("{name}[{j}]");
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

/// Random standard-normal windows with random labels, seeded.
pub fn random_batch(spec: &ModelSpec, size: usize, seed: u64) -> Vec<(Tensor<f64>, u8)> {
    let mut rng = Stream::root(seed).fork(rng::DATA).rng();
    (0..size)
        .map(|_| {
            let n = spec.in_channels * spec.window;
            let data = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let x = Tensor::new(vec![spec.in_channels, spec.window], data).expect("window shape");
            (x, rng.random_range(1..=NUM_FACIES as u8))
        })
        .collect()
}

/// He-initialized weights with biases drawn from N(0, 0.1²). Zero biases
/// put ReLU pre-activations exactly on the kink wherever the incoming
/// activations are all zero, where a central difference is meaningless.
pub fn check_params(spec: &ModelSpec, seed: u64) -> Result<ModelParams<f64>> {
    let mut params = init_params::<f64>(spec, seed)?;
    let mut rng = Stream::root(seed).fork(rng::DATA).fork(1).rng();
    for (name, t) in params.names.iter().zip(params.tensors.iter_mut()) {
        if name.ends_with(".b") {
            t.data_mut()
                .iter_mut()
                .for_each(|b| *b = 0.1 * rng.sample::<f64, _>(StandardNormal));
        }
    }
    Ok(params)
}

/// Full check for one seed: parameters, batch and dropout masks all derive
/// from `seed`.
pub fn check_seed(
    spec: &ModelSpec,
    seed: u64,
    batch_size: usize,
    tamper: impl Fn(&mut ModelParams<f64>),
) -> Result<GradCheckReport> {
    let params = check_params(spec, seed)?;
    let batch = random_batch(spec, batch_size, seed);
    finite_diff_check_with(
        spec,
        &params,
        &batch,
        GRADCHECK_STEP,
        Stream::root(seed).fork(rng::DROPOUT),
        tamper,
    )
}
