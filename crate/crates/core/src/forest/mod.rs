//! Bagged CART regression trees with per-split feature subsampling.

mod grid;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

pub use grid::{fit_rows, forest_grid_search, ForestCell, ForestGrid, ForestGridResult, MaxFeatures, MaxFeaturesRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForestError {
    #[error("no training data")]
    EmptyData,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<ForestError>,
    },
}

impl ForestError {
    pub fn code(&self) -> &'static str {
        match self {
            ForestError::EmptyData => "EmptyData",
            ForestError::DimensionMismatch { .. } => "DimensionMismatch",
            ForestError::InvalidConfig(_) => "InvalidConfig",
            ForestError::Cell { source, .. } => source.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered at each split, drawn without replacement.
    pub max_features: usize,
    pub seed: u64,
    /// Resample with replacement per tree. Off means every tree sees the
    /// full sample.
    pub bootstrap: bool,
}

impl ForestConfig {
    pub fn validate(&self, n_features: usize) -> Result<(), ForestError> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 || self.max_features == 0 {
            return Err(ForestError::InvalidConfig(
                "n_trees, max_depth, min_samples_leaf and max_features must be positive".into(),
            ));
        }
        if self.max_features > n_features {
            return Err(ForestError::InvalidConfig(format!(
                "max_features {} exceeds feature dimension {n_features}",
                self.max_features
            )));
        }
        Ok(())
    }
}

/// Default per-split feature count, `ceil(d / 3)`.
pub fn default_max_features(n_features: usize) -> usize {
    n_features.div_ceil(3).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub sse_reduction: f64,
}

/// Reductions closer than this are ties.
fn tie_epsilon(parent_sse: f64) -> f64 {
    1e-12 * parent_sse.max(1.0)
}

fn sse(y: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
}

/// Midpoint that keeps `lo` on the left and `hi` on the right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Exhaustive CART split over midpoints of consecutive distinct values.
/// Samples go left when `x[feature] <= threshold`. Ties within a relative
/// 1e-12 go to the lowest feature, then the lowest threshold.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    samples: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = samples.len();
    if n < 2 || n < 2 * min_samples_leaf {
        return None;
    }
    let parent = sse(y, samples);
    let eps = tie_epsilon(parent);
    let total: f64 = samples.iter().map(|&i| y[i]).sum();
    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    sorted_features.dedup();
    let mut best: Option<Split> = None;
    let mut order = samples.to_vec();
    for &f in &sorted_features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += y[order[i]];
            let (lo, hi) = (x[order[i]][f], x[order[i + 1]][f]);
            let n_left = i + 1;
            let n_right = n - n_left;
            if lo == hi || n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let mean_l = left_sum / n_left as f64;
            let mean_r = (total - left_sum) / n_right as f64;
            let reduction = (n_left * n_right) as f64 / n as f64 * (mean_l - mean_r).powi(2);
            if reduction <= eps {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => reduction > b.sse_reduction + eps,
            };
            if better {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    sse_reduction: reduction,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { n_samples, .. } => Some(*n_samples),
                Node::Split { .. } => None,
            })
            .collect()
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    cfg: &'a ForestConfig,
    n_features: usize,
    rng: SplitMix64,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    /// Partial Fisher-Yates draw of `max_features` indices.
    fn sample_features(&mut self) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..self.n_features).collect();
        for i in 0..self.cfg.max_features {
            let j = i + self.rng.below(self.n_features - i);
            pool.swap(i, j);
        }
        pool.truncate(self.cfg.max_features);
        pool
    }

    fn grow(&mut self, samples: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let value = samples.iter().map(|&i| self.y[i]).sum::<f64>() / samples.len() as f64;
        self.nodes.push(Node::Leaf {
            value,
            n_samples: samples.len(),
        });
        if depth >= self.cfg.max_depth {
            return id;
        }
        let features = self.sample_features();
        let Some(split) = best_split(self.x, self.y, samples, &features, self.cfg.min_samples_leaf) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Fits one tree. The RNG draws the bootstrap sample first, then the
/// feature subsets in depth-first, left-first order.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig, tree_seed: u64) -> DecisionTree {
    let n = y.len();
    let mut rng = SplitMix64::new(tree_seed);
    let samples: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.below(n)).collect()
    } else {
        (0..n).collect()
    };
    let mut g = Grower {
        x,
        y,
        cfg,
        n_features: x[0].len(),
        rng,
        nodes: Vec::new(),
    };
    g.grow(&samples, 0);
    DecisionTree { nodes: g.nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
    /// Seed each tree was grown from, `seed ^ tree_index`.
    pub tree_seeds: Vec<u64>,
}

/// Trees are grown in parallel; each owns its RNG so the result does not
/// depend on scheduling.
pub fn fit_forest(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig) -> Result<RandomForest, ForestError> {
    if y.is_empty() || x.is_empty() || y.len() < cfg.min_samples_leaf {
        return Err(ForestError::EmptyData);
    }
    if x.len() != y.len() {
        return Err(ForestError::DimensionMismatch {
            expected: y.len(),
            got: x.len(),
        });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(ForestError::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    cfg.validate(d)?;
    let tree_seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|t| cfg.seed ^ t).collect();
    let trees = tree_seeds.par_iter().map(|&s| fit_tree(x, y, cfg, s)).collect();
    Ok(RandomForest {
        n_features: d,
        trees,
        tree_seeds,
    })
}

impl RandomForest {
    pub fn predict(&self, x: &[f64]) -> Result<f64, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64)
    }
}
