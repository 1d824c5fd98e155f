//! Exhaustive grid search with material-level inner cross validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::fit_mtnn;
use super::MtnnError;
use crate::dataset::{kfold_by_material, FeatureRow, PropertyChannel};
use crate::rng::derive_seed;

/// Where the selector enters, either a 1-based hidden layer or a position
/// relative to the last hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SelectorLayer {
    Index(usize),
    Relative(RelativeLayer),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativeLayer {
    Last,
    SecondToLast,
}

impl SelectorLayer {
    pub const LAST: SelectorLayer = SelectorLayer::Relative(RelativeLayer::Last);
    pub const SECOND_TO_LAST: SelectorLayer = SelectorLayer::Relative(RelativeLayer::SecondToLast);

    /// 1-based layer for a network with `n_hidden` hidden layers, or `None`
    /// when that layer does not exist.
    pub fn resolve(self, n_hidden: usize) -> Option<usize> {
        let idx = match self {
            SelectorLayer::Index(i) => i,
            SelectorLayer::Relative(RelativeLayer::Last) => n_hidden,
            SelectorLayer::Relative(RelativeLayer::SecondToLast) => n_hidden.checked_sub(1)?,
        };
        (1..=n_hidden).contains(&idx).then_some(idx)
    }
}

/// Axes of the search. Cells are the Cartesian product enumerated with
/// `hidden_sizes` outermost and `l2_penalty` innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnGrid {
    pub hidden_sizes: Vec<Vec<usize>>,
    pub selector_layer: Vec<SelectorLayer>,
    pub learning_rate: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub l2_penalty: Vec<f64>,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for NnGrid {
    fn default() -> Self {
        NnGrid {
            hidden_sizes: vec![vec![64, 32]],
            selector_layer: vec![SelectorLayer::LAST, SelectorLayer::SECOND_TO_LAST],
            learning_rate: vec![1e-3],
            batch_size: vec![32],
            l2_penalty: vec![0.0, 1e-4],
            max_epochs: 300,
            patience: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub hidden_sizes: Vec<usize>,
    /// 1-based; zero for selector-free cells.
    pub selector_layer_index: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_penalty: f64,
}

impl NnGrid {
    pub fn validate(&self) -> Result<(), MtnnError> {
        let bad = |m: &str| Err(MtnnError::InvalidConfig(m.to_string()));
        if self.hidden_sizes.is_empty()
            || self.selector_layer.is_empty()
            || self.learning_rate.is_empty()
            || self.batch_size.is_empty()
            || self.l2_penalty.is_empty()
        {
            return bad("every grid axis needs at least one value");
        }
        if self.hidden_sizes.iter().any(|h| h.is_empty() || h.contains(&0)) {
            return bad("hidden sizes must be non-empty and positive");
        }
        if self.learning_rate.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("learning rates must be positive and finite");
        }
        if self.batch_size.contains(&0) {
            return bad("batch sizes must be positive");
        }
        if self.l2_penalty.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return bad("l2 penalties must be non-negative and finite");
        }
        if self.max_epochs == 0 || self.patience > self.max_epochs {
            return bad("need max_epochs > 0 and patience <= max_epochs");
        }
        Ok(())
    }

    /// Enumerated cells. Selector positions that do not exist for a given
    /// depth are skipped, as are cells identical to an earlier one. Without a
    /// selector the selector axis collapses.
    pub fn cells(&self, use_selector: bool) -> Result<Vec<GridCell>, MtnnError> {
        self.validate()?;
        let mut out: Vec<GridCell> = Vec::new();
        for hidden in &self.hidden_sizes {
            let positions: Vec<usize> = if use_selector {
                self.selector_layer
                    .iter()
                    .filter_map(|s| s.resolve(hidden.len()))
                    .collect()
            } else {
                vec![0]
            };
            for &sel in &positions {
                for &lr in &self.learning_rate {
                    for &bs in &self.batch_size {
                        for &l2 in &self.l2_penalty {
                            let cell = GridCell {
                                hidden_sizes: hidden.clone(),
                                selector_layer_index: sel,
                                learning_rate: lr,
                                batch_size: bs,
                                l2_penalty: l2,
                            };
                            if !out.contains(&cell) {
                                out.push(cell);
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(MtnnError::EmptyGrid);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    /// Mean inner-fold validation RMSE in standardized space, averaged over
    /// channels. `None` when the search was skipped.
    pub scores: Vec<Option<f64>>,
    pub best_index: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl GridResult {
    pub fn best(&self) -> &GridCell {
        &self.cells[self.best_index]
    }

    /// One line per cell: index, axes, score.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "cell,hidden_sizes,selector_layer_index,learning_rate,batch_size,l2_penalty,mean_val_rmse,best\n",
        );
        for (i, (c, s)) in self.cells.iter().zip(&self.scores).enumerate() {
            let hidden: Vec<String> = c.hidden_sizes.iter().map(|h| h.to_string()).collect();
            let score = s.map_or_else(|| "NA".to_string(), |v| format!("{v}"));
            out.push_str(&format!(
                "{i},{},{},{},{},{},{score},{}\n",
                hidden.join("-"),
                c.selector_layer_index,
                c.learning_rate,
                c.batch_size,
                c.l2_penalty,
                i == self.best_index
            ));
        }
        out
    }
}

/// Seed for one (cell, inner fold) training run.
pub fn cell_fold_seed(seed: u64, cell: usize, fold: usize) -> u64 {
    derive_seed(seed ^ cell as u64, fold as u64)
}

/// Validation RMSE of one inner fold, averaged over the channels present.
fn fold_score(
    train_rows: &[&FeatureRow],
    val_rows: &[&FeatureRow],
    channels: &[PropertyChannel],
    use_selector: bool,
    cell: &GridCell,
    grid: &NnGrid,
    seed: u64,
) -> Result<f64, MtnnError> {
    let model = fit_mtnn(train_rows, channels, use_selector, cell, grid.max_epochs, grid.patience, seed)?;
    let mut sse = vec![0.0; channels.len()];
    let mut count = vec![0usize; channels.len()];
    for r in val_rows {
        let z = model.predict_standardized(&r.features, r.channel)?;
        let t = model.standardizer.apply_target(r.channel, r.target);
        sse[r.channel] += (z - t).powi(2);
        count[r.channel] += 1;
    }
    let per_channel: Vec<f64> = sse
        .iter()
        .zip(&count)
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| (s / n as f64).sqrt())
        .collect();
    Ok(per_channel.iter().sum::<f64>() / per_channel.len() as f64)
}

/// Scores every cell by material-level `inner_k`-fold cross validation over
/// `rows`. The lowest mean wins; ties go to the earliest cell. A single-cell
/// grid is returned without training. Cells and folds run in parallel, each
/// with its own derived seed, so the result does not depend on scheduling.
pub fn grid_search(
    grid: &NnGrid,
    rows: &[&FeatureRow],
    channels: &[PropertyChannel],
    use_selector: bool,
    inner_k: usize,
    seed: u64,
) -> Result<GridResult, MtnnError> {
    let cells = grid.cells(use_selector)?;
    let mut materials: Vec<String> = rows.iter().map(|r| r.material.clone()).collect();
    materials.sort();
    materials.dedup();
    let k = inner_k.min(materials.len());
    if cells.len() == 1 || k < 2 {
        return Ok(GridResult {
            scores: vec![None; cells.len()],
            cells,
            best_index: 0,
            max_epochs: grid.max_epochs,
            patience: grid.patience,
        });
    }
    let plan = kfold_by_material(&materials, k, seed)
        .map_err(|e| MtnnError::InvalidConfig(e.to_string()))?;
    let folds: Vec<(Vec<&FeatureRow>, Vec<&FeatureRow>)> = (0..k)
        .map(|f| {
            rows.iter()
                .partition::<Vec<&FeatureRow>, _>(|r| plan.fold_of(&r.material) != Some(f))
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    let results: Vec<Result<f64, MtnnError>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train_rows, val_rows) = &folds[f];
            fold_score(
                train_rows,
                val_rows,
                channels,
                use_selector,
                &cells[c],
                grid,
                cell_fold_seed(seed, c, f),
            )
            .map_err(|e| MtnnError::Cell {
                cell: c,
                source: Box::new(e),
            })
        })
        .collect();
    let mut scores = vec![0.0; cells.len()];
    for (&(c, _), r) in jobs.iter().zip(results) {
        scores[c] += r? / k as f64;
    }
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridResult {
        cells,
        scores: scores.into_iter().map(Some).collect(),
        best_index,
        max_epochs: grid.max_epochs,
        patience: grid.patience,
    })
}
