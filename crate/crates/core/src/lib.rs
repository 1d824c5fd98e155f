//! Featurization, models and evaluation protocol for multi-task,
//! multi-fidelity property prediction of energetic molecules.

pub mod dataset;
pub mod descriptors;
pub mod eval;
pub mod forest;
pub mod molgraph;
pub mod mtnn;
pub mod persist;
pub mod rng;
