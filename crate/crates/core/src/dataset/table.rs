//! Featurized records ready for model training.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{Dataset, DatasetError, PropertyChannel};
use crate::descriptors::{featurize, FeatureSchema};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub material: String,
    /// Unscaled descriptor vector.
    pub features: Vec<f64>,
    pub channel: usize,
    /// Target in transformed channel units.
    pub target: f64,
}

/// One row per record; rows sorted by (material, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub channels: Vec<PropertyChannel>,
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    /// Featurizes each material once, in parallel.
    pub fn build(dataset: &Dataset, schema: &FeatureSchema) -> Result<Self, DatasetError> {
        let vectors: Vec<Result<Vec<f64>, DatasetError>> = dataset
            .materials()
            .par_iter()
            .map(|m| {
                let density = if schema.include_density { m.density } else { None };
                featurize(&m.graph, schema, density)
                    .map(|v| v.values)
                    .map_err(|source| DatasetError::Featurize {
                        material: m.id.clone(),
                        source,
                    })
            })
            .collect();
        let vectors: Vec<Vec<f64>> = vectors.into_iter().collect::<Result<_, _>>()?;
        let rows = dataset
            .records()
            .iter()
            .map(|r| {
                let idx = dataset
                    .materials()
                    .binary_search_by(|m| m.id.as_str().cmp(&r.material_id))
                    .expect("record material exists");
                FeatureRow {
                    material: r.material_id.clone(),
                    features: vectors[idx].clone(),
                    channel: r.channel,
                    target: dataset.transformed(r),
                }
            })
            .collect();
        Ok(FeatureTable {
            channels: dataset.registry().channels().to_vec(),
            feature_names: schema.names.clone(),
            rows,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Distinct materials, sorted.
    pub fn materials(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.material.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Rows whose material is in `materials` (sorted slice).
    pub fn select(&self, materials: &[&str]) -> Vec<&FeatureRow> {
        self.rows
            .iter()
            .filter(|r| materials.binary_search(&r.material.as_str()).is_ok())
            .collect()
    }

    pub fn channel_rows(&self, channel: usize) -> impl Iterator<Item = &FeatureRow> {
        self.rows.iter().filter(move |r| r.channel == channel)
    }
}
