//! Metrics, the repeated cross-validation protocol and report generation.

mod metrics;
mod protocol;
mod report;

use thiserror::Error;

use crate::dataset::DatasetError;

pub use metrics::{mean_std, r2, rmse};
pub use protocol::{
    prepare, run_protocol, run_protocol_on_table, ChannelSummary, FoldMetric, ModelFamily, ProtocolConfig, ProtocolReport,
};
pub use report::{
    bars_csv, folds_csv, format_pm, improvements_csv, report_csv, table_markdown, write_reports, REPORT_FILES,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {pred} predictions, {actual} actuals")]
    LengthMismatch { pred: usize, actual: usize },
    #[error("no values to score")]
    EmptyInput,
    #[error("r2 undefined for constant targets")]
    ConstantTargets,
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("seed {seed}, fold {fold}: {message}")]
    Fold {
        seed: u64,
        fold: usize,
        code: &'static str,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::LengthMismatch { .. } => "LengthMismatch",
            EvalError::EmptyInput => "EmptyInput",
            EvalError::ConstantTargets => "ConstantTargets",
            EvalError::InvalidProtocol(_) => "InvalidProtocol",
            EvalError::Dataset(e) => e.code(),
            EvalError::Fold { code, .. } => code,
            EvalError::Io(_) => "IoError",
        }
    }
}
