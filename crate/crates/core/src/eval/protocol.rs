//! Repeated material-level k-fold evaluation with inner grid search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mean_std, r2, rmse};
use super::EvalError;
use crate::dataset::{kfold_by_material, Dataset, FeatureRow, FeatureTable};
use crate::descriptors::FeatureSchema;
use crate::forest::{fit_rows, forest_grid_search, ForestGrid};
use crate::mtnn::{fit_mtnn, grid_search, NnGrid};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    StRf,
    StNn,
    MtNn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub family: ModelFamily,
    /// Channel subset 1 to 6; `None` keeps the whole registry.
    pub subset: Option<u8>,
    pub include_density: bool,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub inner_k: usize,
    pub nn_grid: NnGrid,
    pub forest_grid: ForestGrid,
}

impl ProtocolConfig {
    /// Three seeds, outer and inner 5-fold.
    pub fn new(family: ModelFamily, subset: Option<u8>, include_density: bool) -> Self {
        ProtocolConfig {
            family,
            subset,
            include_density,
            seeds: vec![0, 1, 2],
            k: 5,
            inner_k: 5,
            nn_grid: NnGrid::default(),
            forest_grid: ForestGrid::default(),
        }
    }

    pub fn model_id(&self) -> String {
        match (self.family, self.subset) {
            (ModelFamily::StRf, _) => "ST-RF".into(),
            (ModelFamily::StNn, _) => "ST-NN".into(),
            (ModelFamily::MtNn, Some(i)) => format!("MT-NN-sub{i}"),
            (ModelFamily::MtNn, None) => "MT-NN-all".into(),
        }
    }
}

/// One held-out fold for one channel. Metrics are in transformed channel
/// units, so log10 channels report log-unit errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetric {
    pub seed: u64,
    pub fold: usize,
    pub channel: String,
    pub n_test: usize,
    pub rmse: f64,
    /// Undefined for constant test targets.
    pub r2: Option<f64>,
    /// Winning grid cell index.
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub channel: String,
    pub label: String,
    pub n_points: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub n_r2: usize,
    pub r2_mean: Option<f64>,
    pub r2_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub model: String,
    pub include_density: bool,
    pub seeds: Vec<u64>,
    pub k: usize,
    /// Registry channels in order; channels without any fold point are
    /// absent.
    pub channels: Vec<ChannelSummary>,
    /// Sorted by seed, fold, then registry order.
    pub folds: Vec<FoldMetric>,
}

impl ProtocolReport {
    pub fn density_label(&self) -> &'static str {
        if self.include_density {
            "density + molecular descriptors"
        } else {
            "molecular descriptors only"
        }
    }

    pub fn channel(&self, key: &str) -> Option<&ChannelSummary> {
        self.channels.iter().find(|c| c.channel == key)
    }
}

/// Per-fold results keyed by registry channel index.
type FoldOutcome = Vec<(usize, FoldMetric)>;

fn score(
    seed: u64,
    fold: usize,
    key: String,
    cell: usize,
    pairs: &[(f64, f64)],
) -> Result<FoldMetric, EvalError> {
    let pred: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let actual: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(FoldMetric {
        seed,
        fold,
        channel: key,
        n_test: pairs.len(),
        rmse: rmse(&pred, &actual)?,
        r2: r2(&pred, &actual).ok(),
        cell,
    })
}

fn wrap<E: std::fmt::Display>(seed: u64, fold: usize, code: &'static str) -> impl Fn(E) -> EvalError {
    move |e| EvalError::Fold {
        seed,
        fold,
        code,
        message: e.to_string(),
    }
}

/// Seed for one channel's single-task run within a fold.
fn channel_seed(fold_seed: u64, channel: usize) -> u64 {
    derive_seed(fold_seed, channel as u64 + 1)
}

/// Refit seed derived from a grid-search seed.
fn refit_seed(search_seed: u64) -> u64 {
    derive_seed(search_seed, u64::MAX)
}

fn run_fold(
    table: &FeatureTable,
    train: &[&FeatureRow],
    test: &[&FeatureRow],
    cfg: &ProtocolConfig,
    seed: u64,
    fold: usize,
) -> Result<FoldOutcome, EvalError> {
    let fold_seed = derive_seed(seed, fold as u64);
    let channels = &table.channels;
    let n = channels.len();
    let mut out = Vec::new();
    let present = |c: usize| train.iter().any(|r| r.channel == c) && test.iter().any(|r| r.channel == c);
    match cfg.family {
        ModelFamily::MtNn => {
            let search = grid_search(&cfg.nn_grid, train, channels, true, cfg.inner_k, fold_seed)
                .map_err(|e| wrap(seed, fold, e.code())(e))?;
            let model = fit_mtnn(
                train,
                channels,
                true,
                search.best(),
                search.max_epochs,
                search.patience,
                refit_seed(fold_seed),
            )
            .map_err(|e| wrap(seed, fold, e.code())(e))?;
            for c in (0..n).filter(|&c| present(c)) {
                let pairs = test
                    .iter()
                    .filter(|r| r.channel == c)
                    .map(|r| model.predict_transformed(&r.features, c).map(|p| (p, r.target)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| wrap(seed, fold, e.code())(e))?;
                out.push((c, score(seed, fold, channels[c].key(), search.best_index, &pairs)?));
            }
        }
        ModelFamily::StNn => {
            for c in (0..n).filter(|&c| present(c)) {
                let rows: Vec<&FeatureRow> = train.iter().copied().filter(|r| r.channel == c).collect();
                let s = channel_seed(fold_seed, c);
                let search = grid_search(&cfg.nn_grid, &rows, channels, false, cfg.inner_k, s)
                    .map_err(|e| wrap(seed, fold, e.code())(e))?;
                let model = fit_mtnn(
                    &rows,
                    channels,
                    false,
                    search.best(),
                    search.max_epochs,
                    search.patience,
                    refit_seed(s),
                )
                .map_err(|e| wrap(seed, fold, e.code())(e))?;
                let pairs = test
                    .iter()
                    .filter(|r| r.channel == c)
                    .map(|r| model.predict_transformed(&r.features, c).map(|p| (p, r.target)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| wrap(seed, fold, e.code())(e))?;
                out.push((c, score(seed, fold, channels[c].key(), search.best_index, &pairs)?));
            }
        }
        ModelFamily::StRf => {
            for c in (0..n).filter(|&c| present(c)) {
                let rows: Vec<&FeatureRow> = train.iter().copied().filter(|r| r.channel == c).collect();
                let s = channel_seed(fold_seed, c);
                let search = forest_grid_search(&cfg.forest_grid, &rows, cfg.inner_k, s)
                    .map_err(|e| wrap(seed, fold, e.code())(e))?;
                let forest = fit_rows(&rows, search.best(), refit_seed(s)).map_err(|e| wrap(seed, fold, e.code())(e))?;
                let pairs = test
                    .iter()
                    .filter(|r| r.channel == c)
                    .map(|r| forest.predict(&r.features).map(|p| (p, r.target)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| wrap(seed, fold, e.code())(e))?;
                out.push((c, score(seed, fold, channels[c].key(), search.best_index, &pairs)?));
            }
        }
    }
    Ok(out)
}

/// Restricts the dataset to the configured subset and featurizes it. The
/// bond vocabulary is fitted on every molecule in the restricted dataset;
/// it depends on structures only, never on targets.
pub fn prepare(dataset: &Dataset, cfg: &ProtocolConfig) -> Result<(Dataset, FeatureSchema, FeatureTable), EvalError> {
    let data = match cfg.subset {
        Some(id) => dataset.subset(id)?,
        None => dataset.clone(),
    };
    let schema = FeatureSchema::from_graphs(data.materials().iter().map(|m| &m.graph), cfg.include_density);
    let table = FeatureTable::build(&data, &schema)?;
    Ok((data, schema, table))
}

/// Runs the full protocol on a dataset: subset, featurize, then
/// [`run_protocol_on_table`].
pub fn run_protocol(dataset: &Dataset, cfg: &ProtocolConfig) -> Result<ProtocolReport, EvalError> {
    let (_, _, table) = prepare(dataset, cfg)?;
    run_protocol_on_table(&table, cfg)
}

/// Runs the protocol on an already featurized table; `cfg.subset` and
/// `cfg.include_density` are only recorded. Seeds are processed in
/// ascending order whatever order they are given in, so reports depend only
/// on the seed set. All (seed, fold) runs execute in parallel and are
/// reduced sequentially.
pub fn run_protocol_on_table(table: &FeatureTable, cfg: &ProtocolConfig) -> Result<ProtocolReport, EvalError> {
    if cfg.seeds.is_empty() {
        return Err(EvalError::InvalidProtocol("at least one seed is required".into()));
    }
    if cfg.k < 2 || cfg.inner_k < 2 {
        return Err(EvalError::InvalidProtocol("fold counts must be at least 2".into()));
    }
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let ids = table.materials();
    let plans = seeds
        .iter()
        .map(|&s| kfold_by_material(&ids, cfg.k, s))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..seeds.len())
        .flat_map(|s| (0..cfg.k).map(move |f| (s, f)))
        .collect();
    let outcomes: Vec<Result<FoldOutcome, EvalError>> = jobs
        .par_iter()
        .map(|&(si, f)| {
            let plan = &plans[si];
            let (train, test): (Vec<&FeatureRow>, Vec<&FeatureRow>) =
                table.rows.iter().partition(|r| plan.fold_of(&r.material) != Some(f));
            run_fold(table, &train, &test, cfg, seeds[si], f)
        })
        .collect();
    let mut per_channel: Vec<Vec<FoldMetric>> = vec![Vec::new(); table.channels.len()];
    let mut folds = Vec::new();
    for o in outcomes {
        for (c, m) in o? {
            per_channel[c].push(m.clone());
            folds.push(m);
        }
    }
    let channels = per_channel
        .iter()
        .enumerate()
        .filter(|(_, ms)| !ms.is_empty())
        .map(|(c, ms)| {
            let rmses: Vec<f64> = ms.iter().map(|m| m.rmse).collect();
            let r2s: Vec<f64> = ms.iter().filter_map(|m| m.r2).collect();
            let (rmse_mean, rmse_std) = mean_std(&rmses).expect("non-empty");
            let r2_stats = mean_std(&r2s);
            ChannelSummary {
                channel: table.channels[c].key(),
                label: table.channels[c].label(),
                n_points: ms.len(),
                rmse_mean,
                rmse_std,
                n_r2: r2s.len(),
                r2_mean: r2_stats.map(|s| s.0),
                r2_std: r2_stats.map(|s| s.1),
            }
        })
        .collect();
    Ok(ProtocolReport {
        model: cfg.model_id(),
        include_density: cfg.include_density,
        seeds,
        k: cfg.k,
        channels,
        folds,
    })
}
