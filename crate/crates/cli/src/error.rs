//! Typed failures rendered as one JSON line on stderr.

use emtask_core::dataset::DatasetError;
use emtask_core::descriptors::DescriptorError;
use emtask_core::eval::EvalError;
use emtask_core::forest::ForestError;
use emtask_core::molgraph::SmilesError;
use emtask_core::mtnn::MtnnError;
use emtask_core::persist::PersistError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Failure {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure::new("IoError", format!("{}: {e}", path.display()))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("failure serializes")
    }
}

macro_rules! from_coded {
    ($($t:ty),*) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(e.code(), e.to_string())
            }
        })*
    };
}

from_coded!(DatasetError, DescriptorError, EvalError, ForestError, MtnnError, PersistError, SmilesError);
