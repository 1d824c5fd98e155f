//! Multi-fidelity property records: loading, channel subsets, material-level
//! splits, standardization and pairwise correlations.

mod correlation;
mod registry;
mod split;
mod standardize;
mod table;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::molgraph::{parse_smiles, MolGraph};

pub use correlation::{pearson, pearson_matrix, CorrelationMatrix};
pub use registry::{Fidelity, Property, PropertyChannel, PropertyRegistry, Transform};
pub use split::{kfold_by_material, SplitPlan};
pub use standardize::Standardizer;
pub use table::{FeatureRow, FeatureTable};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(String),
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("row {row}: {reason}")]
    ParseFailure { row: usize, reason: String },
    #[error("duplicate record for material {material} on channel {channel}")]
    DuplicateRecord { material: String, channel: String },
    #[error("row {row}: value {value} must be positive for a log10 channel")]
    NonPositiveForLog { row: usize, value: f64 },
    #[error("material {material}: {reason}")]
    InconsistentMaterial { material: String, reason: String },
    #[error("{materials} materials cannot fill {k} folds")]
    TooFewMaterials { materials: usize, k: usize },
    #[error("unknown subset {0}; expected 1 to 6")]
    UnknownSubset(u8),
    #[error("invalid registry: {0}")]
    InvalidRegistry(String),
    #[error("material {material}: {source}")]
    Featurize {
        material: String,
        source: crate::descriptors::DescriptorError,
    },
}

impl DatasetError {
    pub fn code(&self) -> &'static str {
        match self {
            DatasetError::Io(_) => "IoError",
            DatasetError::UnknownChannel(_) => "UnknownChannel",
            DatasetError::ParseFailure { .. } => "ParseFailure",
            DatasetError::DuplicateRecord { .. } => "DuplicateRecord",
            DatasetError::NonPositiveForLog { .. } => "NonPositiveForLog",
            DatasetError::InconsistentMaterial { .. } => "InconsistentMaterial",
            DatasetError::TooFewMaterials { .. } => "TooFewMaterials",
            DatasetError::UnknownSubset(_) => "UnknownSubset",
            DatasetError::InvalidRegistry(_) => "InvalidRegistry",
            DatasetError::Featurize { source, .. } => source.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DedupePolicy {
    #[default]
    Reject,
    /// Average duplicate values of a (material, channel) pair.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub material_id: String,
    /// Index into the dataset's registry.
    pub channel: usize,
    /// Raw value in channel units, before any transform.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Material {
    pub id: String,
    pub smiles: String,
    pub graph: MolGraph,
    pub density: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    registry: PropertyRegistry,
    /// Sorted by id.
    materials: Vec<Material>,
    /// Sorted by (material id, channel index); one record per pair.
    records: Vec<Record>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    material_id: String,
    smiles: String,
    property: String,
    fidelity: String,
    value: String,
    #[serde(default)]
    density: String,
}

/// The six channel subsets, by `(property, fidelity)`. Subset 6 keeps the
/// whole registry.
pub fn subset_channels(id: u8) -> Result<Option<Vec<(Property, Fidelity)>>, DatasetError> {
    use Fidelity::{Calc, Exp};
    use Property::*;
    let detonation = vec![
        (DetVelocity, Exp),
        (DetVelocity, Calc),
        (DetPressure, Exp),
        (DetPressure, Calc),
        (HeatDetonation, Exp),
        (HeatDetonation, Calc),
        (GurneyEnergy, Calc),
    ];
    let thermo = vec![(HeatSublimation, Calc), (HeatFormGas, Calc), (HeatFormCrystal, Exp)];
    let sensitivity = vec![(ImpactH50, Exp)];
    Ok(Some(match id {
        1 => detonation,
        2 => [detonation, sensitivity].concat(),
        3 => [detonation, thermo].concat(),
        4 => thermo,
        5 => [sensitivity, thermo].concat(),
        6 => return Ok(None),
        other => return Err(DatasetError::UnknownSubset(other)),
    }))
}

impl Dataset {
    pub fn load_records(
        path: impl AsRef<Path>,
        registry: &PropertyRegistry,
        dedupe: DedupePolicy,
    ) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| DatasetError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Dataset::from_reader(file, registry, dedupe)
    }

    /// Reads the CSV format `material_id,smiles,property,fidelity,value,density`.
    /// Row numbers in errors count the header as row 1.
    pub fn from_reader(
        reader: impl Read,
        registry: &PropertyRegistry,
        dedupe: DedupePolicy,
    ) -> Result<Self, DatasetError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        // (material, channel) -> (values, first row)
        let mut values: BTreeMap<(String, usize), (Vec<f64>, usize)> = BTreeMap::new();
        let mut materials: BTreeMap<String, Material> = BTreeMap::new();
        for (i, result) in csv.deserialize::<CsvRow>().enumerate() {
            let row = i + 2;
            let raw = result.map_err(|e| DatasetError::ParseFailure {
                row,
                reason: e.to_string(),
            })?;
            if raw.material_id.is_empty() {
                return Err(DatasetError::ParseFailure {
                    row,
                    reason: "empty material_id".into(),
                });
            }
            let unknown = || DatasetError::UnknownChannel(format!("{}:{}", raw.property, raw.fidelity));
            let property: Property = raw.property.parse().map_err(|_| unknown())?;
            let fidelity: Fidelity = raw.fidelity.parse().map_err(|_| unknown())?;
            let channel = registry.index_of(property, fidelity).ok_or_else(unknown)?;
            let value: f64 = raw
                .value
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DatasetError::ParseFailure {
                    row,
                    reason: format!("value '{}' is not a finite number", raw.value),
                })?;
            if registry.channels()[channel].forward(value).is_none() {
                return Err(DatasetError::NonPositiveForLog { row, value });
            }
            let density = if raw.density.is_empty() {
                None
            } else {
                Some(
                    raw.density
                        .parse::<f64>()
                        .ok()
                        .filter(|d| d.is_finite() && *d > 0.0)
                        .ok_or_else(|| DatasetError::ParseFailure {
                            row,
                            reason: format!("density '{}' is not a positive number", raw.density),
                        })?,
                )
            };

            match materials.get_mut(&raw.material_id) {
                Some(m) => {
                    if m.smiles != raw.smiles {
                        return Err(DatasetError::InconsistentMaterial {
                            material: raw.material_id,
                            reason: format!("SMILES '{}' differs from '{}'", raw.smiles, m.smiles),
                        });
                    }
                    match (m.density, density) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(DatasetError::InconsistentMaterial {
                                material: raw.material_id,
                                reason: format!("density {b} differs from {a}"),
                            })
                        }
                        (None, Some(b)) => m.density = Some(b),
                        _ => {}
                    }
                }
                None => {
                    let graph = parse_smiles(&raw.smiles).map_err(|e| DatasetError::ParseFailure {
                        row,
                        reason: format!("{}: {e}", e.code()),
                    })?;
                    materials.insert(
                        raw.material_id.clone(),
                        Material {
                            id: raw.material_id.clone(),
                            smiles: raw.smiles.clone(),
                            graph,
                            density,
                        },
                    );
                }
            }

            let entry = values
                .entry((raw.material_id.clone(), channel))
                .or_insert_with(|| (Vec::new(), row));
            if !entry.0.is_empty() && dedupe == DedupePolicy::Reject {
                return Err(DatasetError::DuplicateRecord {
                    material: raw.material_id,
                    channel: registry.channels()[channel].key(),
                });
            }
            entry.0.push(value);
        }

        let records = values
            .into_iter()
            .map(|((material_id, channel), (vals, _))| Record {
                material_id,
                channel,
                value: vals.iter().sum::<f64>() / vals.len() as f64,
            })
            .collect();
        Ok(Dataset {
            registry: registry.clone(),
            materials: materials.into_values().collect(),
            records,
        })
    }

    /// Builds a dataset from in-memory parts. Records are sorted and must
    /// reference known materials and channels.
    pub fn from_parts(
        registry: PropertyRegistry,
        mut materials: Vec<Material>,
        mut records: Vec<Record>,
    ) -> Result<Self, DatasetError> {
        materials.sort_by(|a, b| a.id.cmp(&b.id));
        records.sort_by(|a, b| (&a.material_id, a.channel).cmp(&(&b.material_id, b.channel)));
        for w in records.windows(2) {
            if w[0].material_id == w[1].material_id && w[0].channel == w[1].channel {
                return Err(DatasetError::DuplicateRecord {
                    material: w[0].material_id.clone(),
                    channel: registry.channels()[w[0].channel].key(),
                });
            }
        }
        for r in &records {
            if r.channel >= registry.len() {
                return Err(DatasetError::UnknownChannel(format!("channel index {}", r.channel)));
            }
            if materials.binary_search_by(|m| m.id.as_str().cmp(&r.material_id)).is_err() {
                return Err(DatasetError::InconsistentMaterial {
                    material: r.material_id.clone(),
                    reason: "record references an unknown material".into(),
                });
            }
        }
        Ok(Dataset {
            registry,
            materials,
            records,
        })
    }

    pub fn registry(&self) -> &PropertyRegistry {
        &self.registry
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn material(&self, id: &str) -> Option<&Material> {
        self.materials
            .binary_search_by(|m| m.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.materials[i])
    }

    pub fn material_ids(&self) -> Vec<String> {
        self.materials.iter().map(|m| m.id.clone()).collect()
    }

    /// Value of a record in model units (log10 applied where configured).
    pub fn transformed(&self, record: &Record) -> f64 {
        self.registry.channels()[record.channel]
            .forward(record.value)
            .expect("validated at load")
    }

    /// Records of one channel.
    pub fn channel_records(&self, channel: usize) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.channel == channel)
    }

    /// Restricts to a registry subset; materials left without records are
    /// dropped and channel indices follow the new registry.
    pub fn restrict(&self, keep: &[(Property, Fidelity)]) -> Option<Dataset> {
        let registry = self.registry.restrict(keep)?;
        let remap: Vec<Option<usize>> = self
            .registry
            .channels()
            .iter()
            .map(|c| registry.index_of(c.property, c.fidelity))
            .collect();
        let records: Vec<Record> = self
            .records
            .iter()
            .filter_map(|r| {
                remap[r.channel].map(|channel| Record {
                    channel,
                    ..r.clone()
                })
            })
            .collect();
        let materials = self
            .materials
            .iter()
            .filter(|m| records.iter().any(|r| r.material_id == m.id))
            .cloned()
            .collect();
        Some(Dataset {
            registry,
            materials,
            records,
        })
    }

    pub fn subset(&self, id: u8) -> Result<Dataset, DatasetError> {
        match subset_channels(id)? {
            None => Ok(self.clone()),
            Some(keep) => self.restrict(&keep).ok_or_else(|| {
                DatasetError::InvalidRegistry(format!("subset {id} has no channels in this registry"))
            }),
        }
    }

    /// Single-channel view of one registry channel.
    pub fn single_channel(&self, channel: usize) -> Option<Dataset> {
        let c = self.registry.get(channel)?;
        self.restrict(&[(c.property, c.fidelity)])
    }
}
