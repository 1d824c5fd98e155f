//! Grid search for the single-task forest with material-level inner cross
//! validation.

use serde::{Deserialize, Serialize};

use super::{default_max_features, fit_forest, ForestConfig, ForestError, RandomForest};
use crate::dataset::{kfold_by_material, FeatureRow};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxFeatures {
    Count(usize),
    Rule(MaxFeaturesRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeaturesRule {
    /// `ceil(d / 3)`.
    Third,
    /// `ceil(sqrt(d))`.
    Sqrt,
    All,
}

impl MaxFeatures {
    /// Feature count for dimension `d`, clamped to `1..=d`.
    pub fn resolve(self, d: usize) -> usize {
        let n = match self {
            MaxFeatures::Count(n) => n,
            MaxFeatures::Rule(MaxFeaturesRule::Third) => default_max_features(d),
            MaxFeatures::Rule(MaxFeaturesRule::Sqrt) => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Rule(MaxFeaturesRule::All) => d,
        };
        n.clamp(1, d.max(1))
    }
}

/// Axes enumerated with `n_trees` outermost and `max_features` innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            n_trees: vec![200],
            max_depth: vec![12],
            min_samples_leaf: vec![1, 3],
            max_features: vec![MaxFeatures::Rule(MaxFeaturesRule::Third)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestCell {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub max_features: usize,
}

impl ForestCell {
    pub fn config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
            seed,
            bootstrap: true,
        }
    }
}

impl ForestGrid {
    /// Cells for feature dimension `d`, duplicates after resolution removed.
    pub fn cells(&self, d: usize) -> Result<Vec<ForestCell>, ForestError> {
        let axes_ok = !self.n_trees.is_empty()
            && !self.max_depth.is_empty()
            && !self.min_samples_leaf.is_empty()
            && !self.max_features.is_empty();
        let positive = !self.n_trees.contains(&0)
            && !self.max_depth.contains(&0)
            && !self.min_samples_leaf.contains(&0)
            && !self.max_features.contains(&MaxFeatures::Count(0));
        if !axes_ok || !positive {
            return Err(ForestError::InvalidConfig(
                "forest grid axes must be non-empty with positive values".into(),
            ));
        }
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &min_samples_leaf in &self.min_samples_leaf {
                    for mf in &self.max_features {
                        let cell = ForestCell {
                            n_trees,
                            max_depth,
                            min_samples_leaf,
                            max_features: mf.resolve(d),
                        };
                        if !out.contains(&cell) {
                            out.push(cell);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestGridResult {
    pub cells: Vec<ForestCell>,
    /// Mean inner-fold validation RMSE in transformed units; `None` when the
    /// search was skipped.
    pub scores: Vec<Option<f64>>,
    pub best_index: usize,
}

impl ForestGridResult {
    pub fn best(&self) -> &ForestCell {
        &self.cells[self.best_index]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,n_trees,max_depth,min_samples_leaf,max_features,mean_val_rmse,best\n");
        for (i, (c, s)) in self.cells.iter().zip(&self.scores).enumerate() {
            let score = s.map_or_else(|| "NA".to_string(), |v| format!("{v}"));
            out.push_str(&format!(
                "{i},{},{},{},{},{score},{}\n",
                c.n_trees,
                c.max_depth,
                c.min_samples_leaf,
                c.max_features,
                i == self.best_index
            ));
        }
        out
    }
}

/// Fits on rows of one channel, targets in transformed units.
pub fn fit_rows(rows: &[&FeatureRow], cell: &ForestCell, seed: u64) -> Result<RandomForest, ForestError> {
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let mut cfg = cell.config(seed);
    cfg.min_samples_leaf = cfg.min_samples_leaf.min(y.len().max(1));
    fit_forest(&x, &y, &cfg)
}

/// Scores every cell by material-level `inner_k`-fold cross validation on
/// rows of a single channel. Lowest mean RMSE wins, ties to the earliest
/// cell. Trees within each fit run in parallel.
pub fn forest_grid_search(
    grid: &ForestGrid,
    rows: &[&FeatureRow],
    inner_k: usize,
    seed: u64,
) -> Result<ForestGridResult, ForestError> {
    let d = rows.first().ok_or(ForestError::EmptyData)?.features.len();
    let cells = grid.cells(d)?;
    let mut materials: Vec<String> = rows.iter().map(|r| r.material.clone()).collect();
    materials.sort();
    materials.dedup();
    let k = inner_k.min(materials.len());
    if cells.len() == 1 || k < 2 {
        return Ok(ForestGridResult {
            scores: vec![None; cells.len()],
            cells,
            best_index: 0,
        });
    }
    let plan = kfold_by_material(&materials, k, seed).map_err(|e| ForestError::InvalidConfig(e.to_string()))?;
    let mut scores = vec![0.0; cells.len()];
    for (c, cell) in cells.iter().enumerate() {
        for f in 0..k {
            let (train, val): (Vec<&FeatureRow>, Vec<&FeatureRow>) =
                rows.iter().partition(|r| plan.fold_of(&r.material) != Some(f));
            let forest = fit_rows(&train, cell, derive_seed(seed ^ c as u64, f as u64)).map_err(|e| {
                ForestError::Cell {
                    cell: c,
                    source: Box::new(e),
                }
            })?;
            let mut sse = 0.0;
            for r in &val {
                sse += (forest.predict(&r.features)? - r.target).powi(2);
            }
            scores[c] += (sse / val.len() as f64).sqrt() / k as f64;
        }
    }
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best_index] {
            best_index = i;
        }
    }
    Ok(ForestGridResult {
        cells,
        scores: scores.into_iter().map(Some).collect(),
        best_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parses_and_resolves() {
        let g: ForestGrid = serde_json::from_str(
            r#"{"n_trees":[10],"max_depth":[3],"min_samples_leaf":[1],"max_features":["third","sqrt",4,"all"]}"#,
        )
        .unwrap();
        let mf: Vec<usize> = g.cells(9).unwrap().iter().map(|c| c.max_features).collect();
        assert_eq!(mf, vec![3, 4, 9]);
    }

    #[test]
    fn search_prefers_deeper_trees_on_a_step() {
        let rows: Vec<FeatureRow> = (0..30)
            .map(|i| FeatureRow {
                material: format!("m{i:02}"),
                features: vec![i as f64],
                channel: 0,
                target: if i % 10 < 5 { 0.0 } else { 1.0 },
            })
            .collect();
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let grid = ForestGrid {
            n_trees: vec![5],
            max_depth: vec![1, 6],
            min_samples_leaf: vec![1],
            max_features: vec![MaxFeatures::Rule(MaxFeaturesRule::All)],
        };
        let a = forest_grid_search(&grid, &refs, 5, 3).unwrap();
        assert_eq!(a.best().max_depth, 6);
        assert_eq!(a, forest_grid_search(&grid, &refs, 5, 3).unwrap());
    }
}
