//! Z-scoring of features and per-channel targets, fitted on training data.

use serde::{Deserialize, Serialize};

use super::PropertyChannel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_mean: Vec<f64>,
    /// Population standard deviation; 1.0 for constant columns.
    pub feature_std: Vec<f64>,
    pub feature_constant: Vec<bool>,
    /// Per channel, in transformed units. Channels without training data
    /// keep mean 0 and std 1.
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> Option<(f64, f64)> {
    let n = values.clone().count();
    if n == 0 {
        return None;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Some((mean, var.sqrt()))
}

impl Standardizer {
    /// `features` rows must share one width; `targets` pairs a channel index
    /// with a transformed value.
    pub fn fit(features: &[Vec<f64>], targets: &[(usize, f64)], n_channels: usize) -> Self {
        let width = features.first().map_or(0, Vec::len);
        let mut feature_mean = vec![0.0; width];
        let mut feature_std = vec![1.0; width];
        let mut feature_constant = vec![true; width];
        for j in 0..width {
            if let Some((m, s)) = mean_std(features.iter().map(|r| r[j])) {
                feature_mean[j] = m;
                if s > 0.0 && s.is_finite() {
                    feature_std[j] = s;
                    feature_constant[j] = false;
                }
            }
        }
        let mut target_mean = vec![0.0; n_channels];
        let mut target_std = vec![1.0; n_channels];
        for c in 0..n_channels {
            let vals = targets.iter().filter(|t| t.0 == c).map(|t| t.1);
            if let Some((m, s)) = mean_std(vals) {
                target_mean[c] = m;
                if s > 0.0 && s.is_finite() {
                    target_std[c] = s;
                }
            }
        }
        Standardizer {
            feature_mean,
            feature_std,
            feature_constant,
            target_mean,
            target_std,
        }
    }

    /// Constant columns map to 0.
    pub fn apply_features(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &x)| {
                if self.feature_constant[j] {
                    0.0
                } else {
                    (x - self.feature_mean[j]) / self.feature_std[j]
                }
            })
            .collect()
    }

    pub fn apply_target(&self, channel: usize, transformed: f64) -> f64 {
        (transformed - self.target_mean[channel]) / self.target_std[channel]
    }

    /// Back to transformed channel units.
    pub fn invert_target(&self, channel: usize, z: f64) -> f64 {
        z * self.target_std[channel] + self.target_mean[channel]
    }

    /// Back to raw channel units, undoing the channel transform.
    pub fn invert_to_original(&self, channel: usize, def: &PropertyChannel, z: f64) -> f64 {
        def.inverse(self.invert_target(channel, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_targets() {
        let s = Standardizer::fit(&[], &[(0, 1.0), (0, 3.0)], 1);
        assert_eq!((s.target_mean[0], s.target_std[0]), (2.0, 1.0));
        assert_eq!(s.apply_target(0, 3.0), 1.0);
    }

    #[test]
    fn constant_feature_flagged() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 3.0]];
        let s = Standardizer::fit(&rows, &[], 0);
        assert_eq!(s.feature_constant, vec![true, false]);
        assert_eq!(s.apply_features(&[5.0, 3.0]), vec![0.0, 1.0]);
        assert_eq!(s.apply_features(&[9.0, 1.0]), vec![0.0, -1.0]);
    }

    #[test]
    fn channels_without_data_are_identity() {
        let s = Standardizer::fit(&[], &[(1, 4.0)], 3);
        assert_eq!(s.apply_target(0, 7.0), 7.0);
        // Single sample: centered with unit scale.
        assert_eq!(s.apply_target(1, 7.0), 3.0);
        assert_eq!(s.invert_target(2, 7.0), 7.0);
    }
}
