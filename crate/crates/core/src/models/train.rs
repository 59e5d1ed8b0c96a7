//! Adam training with plateau learning-rate halving, and MAE evaluation.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{LayerKind, NetworkConfig};
use super::network::{loss_and_grads, predict, NetworkParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, derive_seed};
use crate::sgs::{Dataset, SgsSample};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Samples per Adam step; gradients are averaged over the batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Training stops once the rate falls below this floor.
    pub min_learning_rate: f64,
    /// Epochs without validation improvement before the rate is halved.
    pub patience: usize,
    /// Smallest validation MAE decrease that counts as an improvement.
    pub plateau_eps: f64,
    pub decay: f64,
    pub max_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seed for the per-epoch shuffles.
    pub seed: u64,
    /// Sum batch gradients in sample order instead of a parallel tree.
    pub deterministic: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 0.01,
            min_learning_rate: 1e-5,
            patience: 10,
            plateau_eps: 1e-5,
            decay: 0.5,
            max_epochs: 300,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            deterministic: false,
        }
    }
}

impl TrainOptions {
    fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.decay, self.epsilon];
        if self.batch_size == 0
            || positive.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || self.decay >= 1.0
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return Err(Error::Parameter(format!("invalid training options: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean per-sample loss seen during the epoch.
    pub train_mae: f64,
    /// Validation MAE after the epoch.
    pub val_mae: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation MAE.
    pub params: NetworkParams,
    pub history: Vec<EpochRecord>,
    pub best_val_mae: f64,
}

/// Adam state for a list of tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: i32,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(shapes: &[(usize, usize)], beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros = || shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();
        Self {
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.m[i].as_mut_slice();
            let v = self.v[i].as_mut_slice();
            for (((w, &gi), mi), vi) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                *w -= lr * (*mi / c1) / ((*vi / c2).sqrt() + self.epsilon);
            }
        }
    }
}

fn batch_gradients(
    config: &NetworkConfig,
    params: &NetworkParams,
    batch: &[&SgsSample],
    deterministic: bool,
) -> Result<(f64, Vec<Matrix>)> {
    let per_sample = |s: &&SgsSample| loss_and_grads(config, params, &s.graph, &s.x, &s.y);
    let add = |(la, mut ga): (f64, Vec<Matrix>), (lb, gb): (f64, Vec<Matrix>)| {
        for (a, b) in ga.iter_mut().zip(&gb) {
            a.add_assign(b);
        }
        (la + lb, ga)
    };
    let (loss, mut grads) = if deterministic {
        let results: Vec<_> = batch.par_iter().map(per_sample).collect::<Result<_>>()?;
        results.into_iter().reduce(add).expect("batch is non-empty")
    } else {
        batch
            .par_iter()
            .map(per_sample)
            .try_reduce_with(|a, b| Ok(add(a, b)))
            .expect("batch is non-empty")?
    };
    let scale = 1.0 / batch.len() as f64;
    for g in &mut grads {
        g.scale_assign(scale);
    }
    Ok((loss, grads))
}

/// Trains from `init` and returns the best-validation parameters along with
/// the per-epoch history.
pub fn train(
    config: &NetworkConfig,
    init: NetworkParams,
    train_set: &[SgsSample],
    val_set: &[SgsSample],
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    config.validate()?;
    options.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Parameter("training needs non-empty train and validation splits".into()));
    }
    let mut params = init;
    let shapes: Vec<_> = params.tensors().iter().map(|m| m.shape()).collect();
    let mut adam = Adam::new(&shapes, options.beta1, options.beta2, options.epsilon);

    let mut lr = options.learning_rate;
    let mut best_val = evaluate(config, &params, val_set)?;
    let mut best_params = params.clone();
    let mut stale = 0;
    let mut history = Vec::new();
    let mut order: Vec<&SgsSample> = train_set.iter().collect();

    for epoch in 1..=options.max_epochs {
        if lr < options.min_learning_rate {
            break;
        }
        order.shuffle(&mut rng::seeded(derive_seed(options.seed, &[epoch as u64])));
        let mut loss_sum = 0.0;
        for batch in order.chunks(options.batch_size) {
            let (loss, grads) = batch_gradients(config, &params, batch, options.deterministic)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient in epoch {epoch} (batch loss {loss}, lr {lr})"
                )));
            }
            loss_sum += loss;
            adam.step(&mut params.tensors_mut(), &grads, lr);
        }
        let val_mae = evaluate(config, &params, val_set)?;
        if !val_mae.is_finite() {
            return Err(Error::Numeric(format!("non-finite validation MAE in epoch {epoch}")));
        }
        history.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_mae: loss_sum / train_set.len() as f64,
            val_mae,
        });
        if val_mae < best_val - options.plateau_eps {
            best_val = val_mae;
            best_params = params.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= options.patience {
                lr *= options.decay;
                stale = 0;
            }
        }
        // Marginal gains still update the best weights without resetting patience.
        if val_mae < best_val {
            best_val = val_mae;
            best_params = params.clone();
        }
    }
    Ok(TrainOutcome {
        params: best_params,
        history,
        best_val_mae: best_val,
    })
}

/// Mean absolute error over all entries of `pred - target`.
pub fn mae(pred: &Matrix, target: &Matrix) -> Result<f64> {
    pred.check_same_shape(target, "mae")?;
    let n = pred.as_slice().len();
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Mean over samples of the per-sample node MAE.
pub fn evaluate(config: &NetworkConfig, params: &NetworkParams, samples: &[SgsSample]) -> Result<f64> {
    evaluate_with(samples, |s| predict(config, params, &s.graph, &s.x))
}

/// [`evaluate`] for an arbitrary predictor.
pub fn evaluate_with<F>(samples: &[SgsSample], predictor: F) -> Result<f64>
where
    F: Fn(&SgsSample) -> Result<Matrix> + Sync,
{
    if samples.is_empty() {
        return Err(Error::Parameter("cannot evaluate on an empty split".into()));
    }
    let errors: Vec<f64> = samples
        .par_iter()
        .map(|s| mae(&predictor(s)?, &s.y))
        .collect::<Result<_>>()?;
    Ok(errors.iter().sum::<f64>() / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub layers: usize,
    pub model: LayerKind,
    pub test_mae: f64,
}

/// Trains every `(depth, kind)` pair from `template` (depth and layer kind
/// overridden) and reports test MAE of the best-validation parameters.
pub fn sweep_depth(
    template: &NetworkConfig,
    kinds: &[LayerKind],
    depths: &[usize],
    data: &Dataset,
    options: &TrainOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(kinds.len() * depths.len());
    for &layers in depths {
        for &model in kinds {
            let config = NetworkConfig {
                layer: model,
                depth: layers,
                ..template.clone()
            };
            let init = NetworkParams::init(&config)?;
            let outcome = train(&config, init, &data.train, &data.val, options)?;
            let test_mae = evaluate(&config, &outcome.params, &data.test)?;
            rows.push(SweepRow {
                layers,
                model,
                test_mae,
            });
        }
    }
    Ok(rows)
}
