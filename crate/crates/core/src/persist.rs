//! Binary model container shared by networks ("EMMT") and forests ("EMRF").
//!
//! Layout, all integers little-endian:
//! magic `[u8; 4]`, version `u32`, checksum `u64`, header length `u64`,
//! JSON header, then the network parameters as `f64` in flat layer order.
//! The checksum is the first eight bytes of SHA-256 over everything after
//! the checksum field. Forest trees live in the header and carry no
//! trailing floats.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{PropertyRegistry, Standardizer};
use crate::descriptors::FeatureSchema;
use crate::forest::RandomForest;
use crate::mtnn::{EpochRecord, MTNet, MTNetConfig, TrainedMtnn};

pub const MTNN_MAGIC: [u8; 4] = *b"EMMT";
pub const FOREST_MAGIC: [u8; 4] = *b"EMRF";
pub const FORMAT_VERSION: u32 = 1;
const PREAMBLE: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported model file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
}

impl PersistError {
    pub fn code(&self) -> &'static str {
        match self {
            PersistError::Io(_) => "IoError",
            PersistError::VersionMismatch { .. } => "VersionMismatch",
            PersistError::CorruptFile(_) => "CorruptFile",
        }
    }
}

/// A trained network with everything prediction needs.
#[derive(Debug, Clone)]
pub struct MtnnBundle {
    pub model: TrainedMtnn,
    pub schema: FeatureSchema,
    pub registry: PropertyRegistry,
}

/// A forest for one registry channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestBundle {
    pub forest: RandomForest,
    pub channel: usize,
    pub schema: FeatureSchema,
    pub registry: PropertyRegistry,
}

#[derive(Debug, Clone)]
pub enum SavedModel {
    Mtnn(Box<MtnnBundle>),
    Forest(ForestBundle),
}

impl SavedModel {
    pub fn schema(&self) -> &FeatureSchema {
        match self {
            SavedModel::Mtnn(b) => &b.schema,
            SavedModel::Forest(b) => &b.schema,
        }
    }

    pub fn registry(&self) -> &PropertyRegistry {
        match self {
            SavedModel::Mtnn(b) => &b.registry,
            SavedModel::Forest(b) => &b.registry,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MtnnHeader {
    config: MTNetConfig,
    registry: PropertyRegistry,
    schema: FeatureSchema,
    standardizer: Standardizer,
    trained_channels: Vec<usize>,
    best_epoch: usize,
    history: Vec<EpochRecord>,
    n_params: usize,
}

#[derive(Serialize, Deserialize)]
struct ForestHeader {
    registry: PropertyRegistry,
    schema: FeatureSchema,
    channel: usize,
    forest: RandomForest,
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

fn assemble(magic: [u8; 4], header: &[u8], weights: &[f64]) -> Vec<u8> {
    let mut body = Vec::with_capacity(8 + header.len() + 8 * weights.len());
    body.extend_from_slice(&(header.len() as u64).to_le_bytes());
    body.extend_from_slice(header);
    for w in weights {
        body.extend_from_slice(&w.to_le_bytes());
    }
    let mut out = Vec::with_capacity(16 + body.len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&checksum(&body).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn encode_mtnn(bundle: &MtnnBundle) -> Vec<u8> {
    let m = &bundle.model;
    let header = MtnnHeader {
        config: m.net.config().clone(),
        registry: bundle.registry.clone(),
        schema: bundle.schema.clone(),
        standardizer: m.standardizer.clone(),
        trained_channels: m.trained_channels.clone(),
        best_epoch: m.best_epoch,
        history: m.history.clone(),
        n_params: m.net.params().len(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    assemble(MTNN_MAGIC, &json, m.net.params())
}

pub fn encode_forest(bundle: &ForestBundle) -> Vec<u8> {
    let header = ForestHeader {
        registry: bundle.registry.clone(),
        schema: bundle.schema.clone(),
        channel: bundle.channel,
        forest: bundle.forest.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    assemble(FOREST_MAGIC, &json, &[])
}

fn corrupt(m: impl Into<String>) -> PersistError {
    PersistError::CorruptFile(m.into())
}

fn check_schema(schema: &FeatureSchema) -> Result<(), PersistError> {
    FeatureSchema::from_manifest_json(&schema.to_manifest_json())
        .map(|_| ())
        .map_err(|e| corrupt(e.to_string()))
}

/// Version is checked before the checksum so a newer file reports as such.
pub fn decode(bytes: &[u8]) -> Result<SavedModel, PersistError> {
    if bytes.len() < PREAMBLE {
        return Err(corrupt("file shorter than its preamble"));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("four bytes");
    if magic != MTNN_MAGIC && magic != FOREST_MAGIC {
        return Err(corrupt("unknown magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("four bytes"));
    if version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let stored = u64::from_le_bytes(bytes[8..16].try_into().expect("eight bytes"));
    let body = &bytes[16..];
    if checksum(body) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let header_len = u64::from_le_bytes(body[..8].try_into().expect("eight bytes")) as usize;
    let rest = &body[8..];
    if header_len > rest.len() {
        return Err(corrupt("header length exceeds file"));
    }
    let (header, tail) = rest.split_at(header_len);
    if tail.len() % 8 != 0 {
        return Err(corrupt("trailing bytes are not whole f64 values"));
    }
    let weights: Vec<f64> = tail
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    if magic == MTNN_MAGIC {
        let h: MtnnHeader = serde_json::from_slice(header).map_err(|e| corrupt(e.to_string()))?;
        check_schema(&h.schema)?;
        if weights.len() != h.n_params {
            return Err(corrupt(format!("expected {} parameters, found {}", h.n_params, weights.len())));
        }
        let net = MTNet::from_parts(h.config, weights).map_err(|e| corrupt(e.to_string()))?;
        if net.config().input_dim != h.schema.len() {
            return Err(corrupt("network input does not match schema width"));
        }
        Ok(SavedModel::Mtnn(Box::new(MtnnBundle {
            model: TrainedMtnn {
                net,
                standardizer: h.standardizer,
                channels: h.registry.channels().to_vec(),
                trained_channels: h.trained_channels,
                best_epoch: h.best_epoch,
                history: h.history,
            },
            schema: h.schema,
            registry: h.registry,
        })))
    } else {
        if !weights.is_empty() {
            return Err(corrupt("forest file carries trailing weights"));
        }
        let h: ForestHeader = serde_json::from_slice(header).map_err(|e| corrupt(e.to_string()))?;
        check_schema(&h.schema)?;
        if h.channel >= h.registry.len() || h.forest.n_features != h.schema.len() {
            return Err(corrupt("forest does not match its registry or schema"));
        }
        Ok(SavedModel::Forest(ForestBundle {
            forest: h.forest,
            channel: h.channel,
            schema: h.schema,
            registry: h.registry,
        }))
    }
}

pub fn save_mtnn(path: &Path, bundle: &MtnnBundle) -> Result<(), PersistError> {
    std::fs::write(path, encode_mtnn(bundle))?;
    Ok(())
}

pub fn save_forest(path: &Path, bundle: &ForestBundle) -> Result<(), PersistError> {
    std::fs::write(path, encode_forest(bundle))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, PersistError> {
    decode(&std::fs::read(path)?)
}
