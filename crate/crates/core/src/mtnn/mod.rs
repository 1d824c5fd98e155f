//! Multi-task network with selector input, its training loop, grid search
//! and the trained-model wrapper used for prediction.
//!
//! The single-task network is the same architecture with `selector_dim = 0`.

mod grid;
mod model;
mod network;
mod train;

use thiserror::Error;

pub use grid::{cell_fold_seed, grid_search, GridCell, GridResult, NnGrid, RelativeLayer, SelectorLayer};
pub use model::{fit_mtnn, holdout_split, ChannelPrediction, TrainedMtnn};
pub use network::{LayerShape, MTNet, MTNetConfig, Sample};
pub use train::{mse, train, EpochRecord, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MtnnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("grid cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<MtnnError>,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("no cells in grid")]
    EmptyGrid,
}

impl MtnnError {
    pub fn code(&self) -> &'static str {
        match self {
            MtnnError::InvalidConfig(_) => "InvalidConfig",
            MtnnError::DimensionMismatch { .. } => "DimensionMismatch",
            MtnnError::EmptyBatch => "EmptyBatch",
            MtnnError::NonFiniteLoss { .. } => "NonFiniteLoss",
            MtnnError::Cell { source, .. } => source.code(),
            MtnnError::SchemaMismatch(_) => "SchemaMismatch",
            MtnnError::EmptyGrid => "EmptyGrid",
        }
    }
}
