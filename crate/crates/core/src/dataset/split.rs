//! Material-level k-fold assignment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl SplitPlan {
    pub fn fold_of(&self, material: &str) -> Option<usize> {
        self.assignment.get(material).copied()
    }

    /// Materials held out in `fold`, sorted.
    pub fn test_materials(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|&(_, &f)| f == fold)
            .map(|(m, _)| m.as_str())
            .collect()
    }

    pub fn train_materials(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|&(_, &f)| f != fold)
            .map(|(m, _)| m.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Sorts the ids, shuffles them with SplitMix64(seed) Fisher–Yates and deals
/// them round-robin into `k` folds.
pub fn kfold_by_material(
    material_ids: &[String],
    k: usize,
    seed: u64,
) -> Result<SplitPlan, DatasetError> {
    let mut ids: Vec<String> = material_ids.to_vec();
    ids.sort();
    ids.dedup();
    if k == 0 || ids.len() < k {
        return Err(DatasetError::TooFewMaterials {
            materials: ids.len(),
            k,
        });
    }
    SplitMix64::new(seed).shuffle(&mut ids);
    let assignment = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i % k))
        .collect();
    Ok(SplitPlan {
        seed,
        k,
        assignment,
    })
}
