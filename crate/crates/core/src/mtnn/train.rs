//! Minibatch Adam with early stopping on validation MSE.

use serde::{Deserialize, Serialize};

use super::network::{MTNet, Sample};
use super::MtnnError;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without strict validation improvement tolerated before
    /// stopping.
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 500,
            patience: 50,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MtnnError> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.patience <= self.max_epochs
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MtnnError::InvalidConfig(format!("invalid training config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch, penalty included.
    pub train_loss: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub net: MTNet,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Mean squared error without penalty.
pub fn mse(net: &MTNet, samples: &[Sample<'_>]) -> Result<f64, MtnnError> {
    if samples.is_empty() {
        return Err(MtnnError::EmptyBatch);
    }
    let mut sse = 0.0;
    for s in samples {
        sse += (net.forward(s.features, s.selector)? - s.target).powi(2);
    }
    Ok(sse / samples.len() as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains in place of a copy of `net`. An empty validation set falls back
/// to training MSE for early stopping.
pub fn train(
    net: &MTNet,
    train: &[Sample<'_>],
    val: &[Sample<'_>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, MtnnError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(MtnnError::EmptyBatch);
    }
    let monitor = if val.is_empty() { train } else { val };
    let mut net = net.clone();
    let mut adam = Adam {
        m: vec![0.0; net.params().len()],
        v: vec![0.0; net.params().len()],
        t: 0,
    };
    let mut rng = SplitMix64::new(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut since_best = 0;
    let mut batch: Vec<Sample<'_>> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i]));
            let (loss, grad) = net.loss_and_gradient(&batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(MtnnError::NonFiniteLoss { epoch });
            }
            adam.step(net.params_mut(), &grad, cfg);
            loss_sum += loss;
            n_batches += 1;
        }
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(MtnnError::NonFiniteLoss { epoch });
        }
        let val_mse = mse(&net, monitor)?;
        if !val_mse.is_finite() {
            return Err(MtnnError::NonFiniteLoss { epoch });
        }
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            val_mse,
        });
        match &best {
            Some((b, _, _)) if val_mse >= *b => {
                since_best += 1;
                if since_best > cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((val_mse, epoch, net.params().to_vec()));
                since_best = 0;
            }
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    net.params_mut().copy_from_slice(&params);
    Ok(TrainOutcome {
        net,
        history,
        best_epoch,
    })
}
