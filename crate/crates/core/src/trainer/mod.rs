//! Initialization and training.
//!
//! Networks start as linear regression: every `alpha` is `0 + 0i`, biases are zero and
//! each weight matrix is a standard-normal draw scaled to unit spectral norm. Training
//! is mini-batch gradient descent on mean squared error over weights, biases and
//! `alpha`, followed by an L1 proximal step (soft-thresholding) on the weights and on
//! both components of every `alpha`.

mod data;
mod gradcheck;
mod spectral;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::activation::{Alpha, CScalar, EvalMode};
use crate::error::{Error, Phase, Result};
use crate::network::{CMatrix, GradientSet, Layer, Network, ParamKind, Part, Projection};

pub use data::Dataset;
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use spectral::{
    spectral_norm, spectral_normalize, POWER_ITERATION_MAX_ITERS, POWER_ITERATION_TOLERANCE,
};

/// Largest tolerated `|im|` of an output that is compared against a real target.
pub const OUTPUT_IMAGINARY_TOLERANCE: f64 = 1e-6;

/// Batches at least this large evaluate their samples on the rayon pool.
const PARALLEL_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L1 strength on weights.
    pub l1_weights: f64,
    /// L1 strength on both components of every `alpha`.
    pub l1_alpha: f64,
    pub seed: u64,
    pub mode: EvalMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 1000,
            batch_size: 1,
            l1_weights: 0.0,
            l1_alpha: 0.0,
            seed: 0,
            mode: EvalMode::RealStrict,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        for (name, v) in [("l1_weights", self.l1_weights), ("l1_alpha", self.l1_alpha)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Full-dataset MSE after the epoch's updates.
    pub loss: f64,
    pub zero_weights: usize,
    pub zero_alpha_components: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_loss, |e| e.loss)
    }

    pub fn final_zero_weights(&self) -> usize {
        self.epochs.last().map_or(0, |e| e.zero_weights)
    }

    pub fn final_zero_alpha_components(&self) -> usize {
        self.epochs.last().map_or(0, |e| e.zero_alpha_components)
    }

    /// `epoch,loss,zero_weights,zero_alpha_components`, one row per epoch.
    /// Row 0 is the loss before training.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,zero_weights,zero_alpha_components\n");
        let row0 = format!("0,{:e},,\n", self.initial_loss);
        out.push_str(&row0);
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:e},{},{}\n",
                e.epoch, e.loss, e.zero_weights, e.zero_alpha_components
            ));
        }
        out
    }
}

/// A fresh network for the given widths (input first).
///
/// All `alpha` are `0 + 0i`, biases are zero, weights are standard-normal draws from
/// `seed` scaled to unit spectral norm, and the output layer keeps only real parts.
pub fn init_network(widths: &[usize], seed: u64) -> Result<Network> {
    if widths.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least an input and an output width, got {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::InvalidConfig(format!("widths must be positive, got {widths:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_layers = widths.len() - 1;
    let mut layers = Vec::with_capacity(n_layers);
    for (k, pair) in widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let rows: Vec<Vec<f64>> = (0..fan_out)
            .map(|_| {
                (0..fan_in)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect()
            })
            .collect();
        let weights = spectral_normalize(&CMatrix::from_real_rows(&rows)?)?;
        let projection = if k + 1 == n_layers {
            Projection::RealPart
        } else {
            Projection::None
        };
        layers.push(Layer::dense(weights, Alpha::ZERO).with_projection(projection));
    }
    Network::new(widths[0], layers)
}

/// Mean of squared differences between the real parts of `output` and `target`.
///
/// An output with `|im| > 1e-6` cannot be compared with a real target and is an error.
pub fn mse_loss(output: &[CScalar], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::Shape(format!(
            "output has length {}, target has length {}",
            output.len(),
            target.len()
        )));
    }
    if output.is_empty() {
        return Err(Error::Shape("empty output".into()));
    }
    if let Some((index, y)) = output
        .iter()
        .enumerate()
        .find(|(_, y)| y.im.abs() > OUTPUT_IMAGINARY_TOLERANCE)
    {
        return Err(Error::ComplexOutput { index, im: y.im });
    }
    let sum: f64 = output
        .iter()
        .zip(target)
        .map(|(y, t)| (y.re - t) * (y.re - t))
        .sum();
    Ok(sum / output.len() as f64)
}

/// `d mse / d y` packed for [`Network::backward`].
pub(crate) fn mse_output_grad(output: &[CScalar], target: &[f64]) -> Vec<CScalar> {
    let scale = 2.0 / output.len() as f64;
    output
        .iter()
        .zip(target)
        .map(|(y, t)| CScalar::new(scale * (y.re - t), 0.0))
        .collect()
}

fn to_complex(x: &[f64]) -> Vec<CScalar> {
    x.iter().map(|&v| CScalar::new(v, 0.0)).collect()
}

/// MSE of one sample and its gradient.
fn sample_gradient(
    net: &Network,
    input: &[f64],
    target: &[f64],
    mode: EvalMode,
) -> Result<(f64, GradientSet)> {
    let (output, trace) = net.forward_traced(&to_complex(input), mode)?;
    let loss = mse_loss(&output, target)?;
    let grads = net.backward(&trace, &mse_output_grad(&output, target))?;
    Ok((loss, grads))
}

/// Mean loss over the dataset.
pub fn dataset_loss(net: &Network, data: &Dataset, mode: EvalMode) -> Result<f64> {
    let mut total = 0.0;
    for (i, (x, t)) in data.inputs().iter().zip(data.targets()).enumerate() {
        let out = net.forward(&to_complex(x), mode).map_err(|e| Error::Training {
            epoch: 0,
            phase: Phase::Evaluation,
            sample: i,
            source: Box::new(e),
        })?;
        total += mse_loss(&out, t)?;
    }
    Ok(total / data.len() as f64)
}

/// Mean gradient over the samples in `batch`, reduced in sample order.
fn batch_gradient(
    net: &Network,
    data: &Dataset,
    batch: &[usize],
    mode: EvalMode,
) -> std::result::Result<GradientSet, (usize, Error)> {
    let eval = |&i: &usize| {
        sample_gradient(net, &data.inputs()[i], &data.targets()[i], mode)
            .map(|(_, g)| g)
            .map_err(|e| (i, e))
    };
    let per_sample: Vec<GradientSet> = if batch.len() >= PARALLEL_BATCH {
        batch.par_iter().map(eval).collect::<std::result::Result<_, _>>()?
    } else {
        batch.iter().map(eval).collect::<std::result::Result<_, _>>()?
    };
    let mut total = GradientSet::zeros_like(net);
    let scale = 1.0 / batch.len() as f64;
    for g in &per_sample {
        total.add_scaled(g, scale);
    }
    Ok(total)
}

/// `sign(v) max(|v| - threshold, 0)`
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// One descent step followed by the L1 proximal step.
///
/// The output layer's `alpha` stays real: its imaginary components are not updated.
pub fn apply_step(net: &mut Network, grads: &GradientSet, config: &TrainConfig) {
    let lr = config.learning_rate;
    let weight_threshold = lr * config.l1_weights;
    let alpha_threshold = lr * config.l1_alpha;
    let last = net.layers().len() - 1;
    for id in net.param_ids() {
        let real_output_alpha =
            id.layer == last && id.part == Part::Im && matches!(id.kind, ParamKind::Alpha { .. });
        if real_output_alpha {
            continue;
        }
        let stepped = net.param(id) - lr * grads.get(id);
        let value = match id.kind {
            ParamKind::Weight { .. } if weight_threshold > 0.0 => {
                soft_threshold(stepped, weight_threshold)
            }
            ParamKind::Alpha { .. } if alpha_threshold > 0.0 => {
                soft_threshold(stepped, alpha_threshold)
            }
            _ => stepped,
        };
        net.set_param(id, value);
    }
}

fn count_zeros(net: &Network) -> (usize, usize) {
    net.layers().iter().fold((0, 0), |(w, a), layer| {
        let zero_w = layer
            .weights
            .as_slice()
            .iter()
            .filter(|v| v.re == 0.0 && v.im == 0.0)
            .count();
        let zero_a = layer
            .alphas
            .iter()
            .map(|al| usize::from(al.re == 0.0) + usize::from(al.im == 0.0))
            .sum::<usize>();
        (w + zero_w, a + zero_a)
    })
}

fn parameters_finite(net: &Network) -> bool {
    net.param_ids().into_iter().all(|id| net.param(id).is_finite())
}

/// Trains `net` in place.
///
/// Each epoch shuffles the samples with a permutation drawn from `config.seed`,
/// splits them into mini-batches and takes one step per batch. A domain error
/// aborts the run and names the epoch, batch and sample.
pub fn fit(net: &mut Network, data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if data.input_dim() != net.input_dim() || data.output_dim() != net.output_dim() {
        return Err(Error::Shape(format!(
            "dataset is {} -> {}, network is {} -> {}",
            data.input_dim(),
            data.output_dim(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let initial_loss = dataset_loss(net, data, config.mode)?;
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let grads = batch_gradient(net, data, batch, config.mode).map_err(|(sample, e)| {
                Error::Training {
                    epoch,
                    phase: Phase::Batch(b),
                    sample,
                    source: Box::new(e),
                }
            })?;
            apply_step(net, &grads, config);
            if !parameters_finite(net) {
                return Err(Error::Diverged {
                    epoch,
                    loss: f64::NAN,
                });
            }
        }
        let loss = dataset_loss(net, data, config.mode).map_err(|e| match e {
            Error::Training {
                phase,
                sample,
                source,
                ..
            } => Error::Training {
                epoch,
                phase,
                sample,
                source,
            },
            other => other,
        })?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        let (zero_weights, zero_alpha_components) = count_zeros(net);
        epochs.push(EpochRecord {
            epoch,
            loss,
            zero_weights,
            zero_alpha_components,
        });
    }
    Ok(TrainReport {
        initial_loss,
        epochs,
    })
}
