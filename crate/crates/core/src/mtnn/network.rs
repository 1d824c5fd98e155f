//! Dense ReLU network with a one-hot selector concatenated to the input of
//! one hidden layer.
//!
//! Parameters live in one flat vector, layer by layer, each layer as its
//! row-major `(fan_out, fan_in)` weight matrix followed by its bias.

use serde::{Deserialize, Serialize};

use super::MtnnError;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MTNetConfig {
    pub input_dim: usize,
    /// Zero for a single-task network.
    pub selector_dim: usize,
    pub hidden_sizes: Vec<usize>,
    /// 1-based hidden layer whose input is widened by the selector. Ignored
    /// when `selector_dim == 0`.
    pub selector_layer_index: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl MTNetConfig {
    pub fn validate(&self) -> Result<(), MtnnError> {
        let bad = |m: String| Err(MtnnError::InvalidConfig(m));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad(format!("hidden sizes {:?} must be non-empty and positive", self.hidden_sizes));
        }
        if self.selector_dim > 0
            && !(1..=self.hidden_sizes.len()).contains(&self.selector_layer_index)
        {
            return bad(format!(
                "selector_layer_index {} outside 1..={}",
                self.selector_layer_index,
                self.hidden_sizes.len()
            ));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return bad(format!("l2_penalty {} must be a finite non-negative number", self.l2_penalty));
        }
        Ok(())
    }

    /// 0-based layer that receives the selector, if any.
    fn selector_layer(&self) -> Option<usize> {
        (self.selector_dim > 0).then(|| self.selector_layer_index - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Offset of the weight matrix in the flat parameter vector; the bias
    /// follows at `offset + fan_in * fan_out`.
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MTNet {
    config: MTNetConfig,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

fn layer_shapes(config: &MTNetConfig) -> Vec<LayerShape> {
    let sel = config.selector_layer();
    let mut shapes = Vec::new();
    let mut width = config.input_dim;
    let mut offset = 0;
    let outs = config.hidden_sizes.iter().copied().chain(std::iter::once(1));
    for (k, fan_out) in outs.enumerate() {
        let fan_in = width + if sel == Some(k) { config.selector_dim } else { 0 };
        shapes.push(LayerShape {
            fan_in,
            fan_out,
            offset,
        });
        offset += fan_in * fan_out + fan_out;
        width = fan_out;
    }
    shapes
}

/// Activations kept for backpropagation.
struct Trace {
    /// Input to each layer, selector included where concatenated.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
}

impl MTNet {
    /// Glorot-uniform weights drawn from SplitMix64(seed) in parameter
    /// order; zero biases.
    pub fn new(config: MTNetConfig) -> Result<Self, MtnnError> {
        config.validate()?;
        let layers = layer_shapes(&config);
        let total = layers.last().map_or(0, |l| l.bias_range().end);
        let mut params = vec![0.0; total];
        let mut rng = SplitMix64::new(config.seed);
        for l in &layers {
            let limit = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            for w in &mut params[l.weight_range()] {
                *w = (2.0 * rng.next_f64() - 1.0) * limit;
            }
        }
        Ok(MTNet {
            config,
            layers,
            params,
        })
    }

    /// Rebuilds a network from stored parameters.
    pub fn from_parts(config: MTNetConfig, params: Vec<f64>) -> Result<Self, MtnnError> {
        config.validate()?;
        let layers = layer_shapes(&config);
        let total = layers.last().map_or(0, |l| l.bias_range().end);
        if params.len() != total {
            return Err(MtnnError::DimensionMismatch {
                expected: total,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(MtnnError::InvalidConfig("non-finite parameter".into()));
        }
        Ok(MTNet {
            config,
            layers,
            params,
        })
    }

    pub fn config(&self) -> &MTNetConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].weight_range()]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].bias_range()]
    }

    /// True for parameter indices that are weights (penalized), false for
    /// biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for l in &self.layers {
            mask[l.weight_range()].fill(true);
        }
        mask
    }

    /// Column range of the selector inputs in the selector layer's weights.
    pub fn selector_columns(&self) -> Option<(usize, std::ops::Range<usize>)> {
        let k = self.config.selector_layer()?;
        let fan_in = self.layers[k].fan_in;
        Some((k, fan_in - self.config.selector_dim..fan_in))
    }

    fn check_dims(&self, features: &[f64], selector: &[f64]) -> Result<(), MtnnError> {
        if features.len() != self.config.input_dim {
            return Err(MtnnError::DimensionMismatch {
                expected: self.config.input_dim,
                got: features.len(),
            });
        }
        if selector.len() != self.config.selector_dim {
            return Err(MtnnError::DimensionMismatch {
                expected: self.config.selector_dim,
                got: selector.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, features: &[f64], selector: &[f64]) -> Result<f64, MtnnError> {
        self.check_dims(features, selector)?;
        Ok(self.trace(features, selector).pre.last().expect("output layer")[0])
    }

    fn trace(&self, features: &[f64], selector: &[f64]) -> Trace {
        let sel = self.config.selector_layer();
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut a = features.to_vec();
        for (k, l) in self.layers.iter().enumerate() {
            if sel == Some(k) {
                a.extend_from_slice(selector);
            }
            let w = &self.params[l.weight_range()];
            let b = &self.params[l.bias_range()];
            let z: Vec<f64> = (0..l.fan_out)
                .map(|o| {
                    let row = &w[o * l.fan_in..(o + 1) * l.fan_in];
                    b[o] + row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>()
                })
                .collect();
            let next = if k + 1 < n {
                z.iter().map(|&v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    /// Adds `scale * d(prediction)/d(params)` into `grad` and returns the
    /// prediction.
    fn accumulate(&self, features: &[f64], selector: &[f64], residual_scale: impl Fn(f64) -> f64, grad: &mut [f64]) -> f64 {
        let t = self.trace(features, selector);
        let n = self.layers.len();
        let prediction = t.pre[n - 1][0];
        let mut delta = vec![residual_scale(prediction)];
        for k in (0..n).rev() {
            let l = self.layers[k];
            let input = &t.inputs[k];
            let wr = l.weight_range();
            let br = l.bias_range();
            for o in 0..l.fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[wr.start + o * l.fan_in..wr.start + (o + 1) * l.fan_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[br.start + o] += d;
            }
            if k == 0 {
                break;
            }
            // Only the part of the input produced by the previous layer
            // carries gradient back; selector columns sit at the end.
            let width = self.layers[k - 1].fan_out;
            let w = &self.params[wr];
            let prev_pre = &t.pre[k - 1];
            delta = (0..width)
                .map(|i| {
                    if prev_pre[i] <= 0.0 {
                        return 0.0;
                    }
                    (0..l.fan_out).map(|o| w[o * l.fan_in + i] * delta[o]).sum()
                })
                .collect();
        }
        prediction
    }

    /// Loss `mean((pred - y)^2) + l2 * sum(w^2)` over the batch, with its
    /// gradient in flat parameter order. Biases are not penalized.
    pub fn loss_and_gradient(&self, batch: &[Sample<'_>]) -> Result<(f64, Vec<f64>), MtnnError> {
        if batch.is_empty() {
            return Err(MtnnError::EmptyBatch);
        }
        let mut grad = vec![0.0; self.params.len()];
        let scale = 2.0 / batch.len() as f64;
        let mut sse = 0.0;
        for s in batch {
            self.check_dims(s.features, s.selector)?;
            let pred = self.accumulate(s.features, s.selector, |p| scale * (p - s.target), &mut grad);
            sse += (pred - s.target).powi(2);
        }
        let mut loss = sse / batch.len() as f64;
        let l2 = self.config.l2_penalty;
        if l2 > 0.0 {
            for l in &self.layers {
                for i in l.weight_range() {
                    let w = self.params[i];
                    loss += l2 * w * w;
                    grad[i] += 2.0 * l2 * w;
                }
            }
        }
        Ok((loss, grad))
    }

    /// Batch loss without the gradient.
    pub fn loss(&self, batch: &[Sample<'_>]) -> Result<f64, MtnnError> {
        if batch.is_empty() {
            return Err(MtnnError::EmptyBatch);
        }
        let mut sse = 0.0;
        for s in batch {
            sse += (self.forward(s.features, s.selector)? - s.target).powi(2);
        }
        let mut loss = sse / batch.len() as f64;
        for l in &self.layers {
            loss += self.config.l2_penalty * self.params[l.weight_range()].iter().map(|w| w * w).sum::<f64>();
        }
        Ok(loss)
    }
}

/// One training example in standardized space.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub features: &'a [f64],
    pub selector: &'a [f64],
    pub target: f64,
}
