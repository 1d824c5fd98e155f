//! A network bundled with the standardizer and channel list it was trained
//! against.

use serde::{Deserialize, Serialize};

use super::grid::GridCell;
use super::network::{MTNet, MTNetConfig, Sample};
use super::train::{train, EpochRecord, TrainConfig};
use super::MtnnError;
use crate::dataset::{kfold_by_material, FeatureRow, PropertyChannel, Standardizer};
use crate::rng::derive_seed;

#[derive(Debug, Clone)]
pub struct TrainedMtnn {
    pub net: MTNet,
    pub standardizer: Standardizer,
    /// Channels the selector indexes, in registry order.
    pub channels: Vec<PropertyChannel>,
    /// Channels seen in training, ascending.
    pub trained_channels: Vec<usize>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPrediction {
    pub channel: String,
    pub label: String,
    pub unit: String,
    /// Raw channel units, channel transform undone.
    pub value: f64,
}

/// Early-stopping holdout: fold 0 of a material-level 5-fold split. With
/// fewer than five materials everything trains and validation reuses it.
pub fn holdout_split<'a>(rows: &[&'a FeatureRow], seed: u64) -> (Vec<&'a FeatureRow>, Vec<&'a FeatureRow>) {
    let mut materials: Vec<String> = rows.iter().map(|r| r.material.clone()).collect();
    materials.sort();
    materials.dedup();
    match kfold_by_material(&materials, 5, seed) {
        Ok(plan) => rows
            .iter()
            .partition(|r| plan.fold_of(&r.material) != Some(0)),
        Err(_) => (rows.to_vec(), rows.to_vec()),
    }
}

/// Feature statistics count each material once.
fn fit_standardizer(rows: &[&FeatureRow], n_channels: usize) -> Standardizer {
    let mut seen = std::collections::BTreeSet::new();
    let features: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| seen.insert(r.material.as_str()))
        .map(|r| r.features.clone())
        .collect();
    let targets: Vec<(usize, f64)> = rows.iter().map(|r| (r.channel, r.target)).collect();
    Standardizer::fit(&features, &targets, n_channels)
}

struct Prepared {
    features: Vec<f64>,
    selector: Vec<f64>,
    target: f64,
}

fn prepare(rows: &[&FeatureRow], s: &Standardizer, n_channels: usize, use_selector: bool) -> Vec<Prepared> {
    rows.iter()
        .map(|r| {
            let mut selector = Vec::new();
            if use_selector {
                selector = vec![0.0; n_channels];
                selector[r.channel] = 1.0;
            }
            Prepared {
                features: s.apply_features(&r.features),
                selector,
                target: s.apply_target(r.channel, r.target),
            }
        })
        .collect()
}

fn as_samples(p: &[Prepared]) -> Vec<Sample<'_>> {
    p.iter()
        .map(|p| Sample {
            features: &p.features,
            selector: &p.selector,
            target: p.target,
        })
        .collect()
}

/// Trains one cell on `rows`. Seeds: network init `derive(seed, 0)`,
/// shuffling `derive(seed, 1)`, early-stop holdout `derive(seed, 2)`.
pub fn fit_mtnn(
    rows: &[&FeatureRow],
    channels: &[PropertyChannel],
    use_selector: bool,
    cell: &GridCell,
    max_epochs: usize,
    patience: usize,
    seed: u64,
) -> Result<TrainedMtnn, MtnnError> {
    let first = rows.first().ok_or(MtnnError::EmptyBatch)?;
    let n_channels = channels.len();
    let standardizer = fit_standardizer(rows, n_channels);
    let (fit_rows, val_rows) = holdout_split(rows, derive_seed(seed, 2));
    let fit = prepare(&fit_rows, &standardizer, n_channels, use_selector);
    let val = prepare(&val_rows, &standardizer, n_channels, use_selector);
    let config = MTNetConfig {
        input_dim: first.features.len(),
        selector_dim: if use_selector { n_channels } else { 0 },
        hidden_sizes: cell.hidden_sizes.clone(),
        selector_layer_index: if use_selector { cell.selector_layer_index } else { 0 },
        l2_penalty: cell.l2_penalty,
        seed: derive_seed(seed, 0),
    };
    let net = MTNet::new(config)?;
    let tc = TrainConfig {
        learning_rate: cell.learning_rate,
        batch_size: cell.batch_size,
        max_epochs,
        patience: patience.min(max_epochs),
        seed: derive_seed(seed, 1),
        ..Default::default()
    };
    let outcome = train(&net, &as_samples(&fit), &as_samples(&val), &tc)?;
    let mut trained_channels: Vec<usize> = rows.iter().map(|r| r.channel).collect();
    trained_channels.sort_unstable();
    trained_channels.dedup();
    Ok(TrainedMtnn {
        net: outcome.net,
        standardizer,
        channels: channels.to_vec(),
        trained_channels,
        best_epoch: outcome.best_epoch,
        history: outcome.history,
    })
}

impl TrainedMtnn {
    pub fn uses_selector(&self) -> bool {
        self.net.config().selector_dim > 0
    }

    /// Prediction in standardized target space.
    pub fn predict_standardized(&self, features: &[f64], channel: usize) -> Result<f64, MtnnError> {
        if features.len() != self.net.config().input_dim {
            return Err(MtnnError::SchemaMismatch(format!(
                "model expects {} features, got {}",
                self.net.config().input_dim,
                features.len()
            )));
        }
        if channel >= self.channels.len() {
            return Err(MtnnError::SchemaMismatch(format!("unknown channel index {channel}")));
        }
        let x = self.standardizer.apply_features(features);
        let mut selector = Vec::new();
        if self.uses_selector() {
            selector = vec![0.0; self.channels.len()];
            selector[channel] = 1.0;
        }
        self.net.forward(&x, &selector)
    }

    /// Prediction in transformed channel units (log10 for log channels).
    pub fn predict_transformed(&self, features: &[f64], channel: usize) -> Result<f64, MtnnError> {
        let z = self.predict_standardized(features, channel)?;
        Ok(self.standardizer.invert_target(channel, z))
    }

    /// Channels this model answers for: every selector channel, or the
    /// trained channels of a single-task model.
    pub fn output_channels(&self) -> Vec<usize> {
        if self.uses_selector() {
            (0..self.channels.len()).collect()
        } else {
            self.trained_channels.clone()
        }
    }

    /// One prediction per output channel in raw units.
    pub fn predict_matrix(&self, features: &[f64]) -> Result<Vec<ChannelPrediction>, MtnnError> {
        self.output_channels()
            .into_iter()
            .map(|c| {
                let def = &self.channels[c];
                let t = self.predict_transformed(features, c)?;
                Ok(ChannelPrediction {
                    channel: def.key(),
                    label: def.label(),
                    unit: def.unit.clone(),
                    value: def.inverse(t),
                })
            })
            .collect()
    }
}
