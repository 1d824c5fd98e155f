//! Molecular descriptors and their assembly into model input vectors.
//!
//! A vector has three parts: a fixed block of [`FIXED_BLOCK_SIZE`] features
//! computed for every molecule, one count per bond type in a corpus-fitted
//! vocabulary, and an optional trailing density slot.

mod bonds;
mod estate;
mod formula;
mod groups;
mod topology;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{parse_smiles, MolGraph, SmilesError};

pub use bonds::{bond_keys, fit_bond_vocabulary, sum_over_bonds, BondKey};
pub use estate::{atom_estates, estate_vector, intrinsic_state, AtomEState, ESTATE_ELEMENTS};
pub use formula::{atom_count_features, gas_product_ratio, oxygen_balance, AtomCountFeatures};
pub use groups::{
    acid_base_counts, functional_group_counts, functional_group_table, is_basic_amine,
    AcidBaseCounts, GroupDefinition, FUNCTIONAL_GROUP_NAMES, PATTERN_TABLE_VERSION,
};
pub use topology::{
    atomic_vdw_contribution, ring_count_features, topology_features, vdw_volume,
    TopologyFeatures, RING_FEATURE_NAMES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptorError {
    #[error("gas-product ratio denominator is zero (no C, H, N or O atoms)")]
    ZeroDenominator,
    #[error("bond type {0} is not in the fitted vocabulary")]
    UnknownBondType(String),
    #[error("molecule has {0} fragments; a single connected molecule is required")]
    MultiFragment(usize),
    #[error("schema includes density but none was given")]
    MissingDensity,
    #[error("schema excludes density but one was given")]
    UnexpectedDensity,
    #[error("density {0} is not a finite positive number")]
    InvalidDensity(f64),
    #[error("cannot parse molecule '{id}': {source}")]
    Parse { id: String, source: SmilesError },
    #[error("invalid schema manifest: {0}")]
    InvalidSchema(String),
    #[error("empty corpus")]
    EmptyCorpus,
}

impl DescriptorError {
    pub fn code(&self) -> &'static str {
        match self {
            DescriptorError::ZeroDenominator => "ZeroDenominator",
            DescriptorError::UnknownBondType(_) => "UnknownBondType",
            DescriptorError::MultiFragment(_) => "MultiFragment",
            DescriptorError::MissingDensity => "MissingDensity",
            DescriptorError::UnexpectedDensity => "UnexpectedDensity",
            DescriptorError::InvalidDensity(_) => "InvalidDensity",
            DescriptorError::Parse { source, .. } => source.code(),
            DescriptorError::InvalidSchema(_) => "InvalidSchema",
            DescriptorError::EmptyCorpus => "EmptyCorpus",
        }
    }
}

pub const SCHEMA_VERSION: u32 = 1;
pub const FIXED_BLOCK_SIZE: usize = 37;
pub const DENSITY_NAME: &str = "density";
pub const BOND_PREFIX: &str = "bond:";

/// Fixed-block layout as `(block name, feature names)`.
pub const FIXED_BLOCKS: [(&str, &[&str]); 9] = [
    ("oxygen_balance", &["ob100"]),
    ("gas_ratio", &["gas_ratio_g"]),
    ("atom_counts", &["ratio_n_c", "n_h", "n_f"]),
    (
        "functional_groups",
        &[
            "fg_nitro",
            "fg_nitramine",
            "fg_nitrate_ester",
            "fg_azide",
            "fg_amino_primary",
            "fg_hydroxyl",
            "fg_carbonyl",
            "fg_cyano",
            "fg_n_oxide",
        ],
    ),
    ("rings", &RING_FEATURE_NAMES),
    (
        "topology",
        &[
            "rotatable_bonds",
            "aromatic_atoms",
            "aromatic_bonds",
            "hbond_donors",
            "hbond_acceptors",
            "bond_polarity_sum",
        ],
    ),
    ("estate", &["estate_c", "estate_n", "estate_o", "estate_f", "estate_cl"]),
    ("vdw_volume", &["vdw_volume"]),
    ("acid_base", &["acidic_groups", "basic_groups"]),
];

pub fn fixed_block_names() -> Vec<&'static str> {
    FIXED_BLOCKS.iter().flat_map(|(_, names)| names.iter().copied()).collect()
}

/// The fixed block for one molecule, in [`fixed_block_names`] order.
pub fn fixed_block(g: &MolGraph) -> Result<Vec<f64>, DescriptorError> {
    let counts = g.molecular_formula();
    let mut v = Vec::with_capacity(FIXED_BLOCK_SIZE);
    v.push(oxygen_balance(&counts));
    v.push(gas_product_ratio(&counts)?);
    let ac = atom_count_features(&counts);
    v.extend([ac.nitrogen_carbon_ratio, ac.n_h, ac.n_f]);
    v.extend(functional_group_counts(g).into_iter().map(|(_, c)| c as f64));
    v.extend(ring_count_features(g));
    v.extend(topology_features(g).to_array());
    v.extend(estate_vector(g));
    v.push(vdw_volume(g));
    let ab = acid_base_counts(g);
    v.extend([ab.acidic as f64, ab.basic as f64]);
    debug_assert_eq!(v.len(), FIXED_BLOCK_SIZE);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpan {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

/// Column layout shared by training and prediction. Serializes to the
/// schema manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub pattern_table_version: u32,
    pub names: Vec<String>,
    pub blocks: Vec<BlockSpan>,
    pub vocabulary: Vec<BondKey>,
    pub include_density: bool,
    /// Implicit hydrogens are counted as X-H bonds in the vocabulary and in
    /// the van der Waals bond correction.
    pub includes_hydrogen_pseudo_bonds: bool,
}

impl FeatureSchema {
    pub fn new(vocabulary: Vec<BondKey>, include_density: bool) -> Self {
        let mut vocabulary = vocabulary;
        vocabulary.sort();
        vocabulary.dedup();
        let mut names: Vec<String> = Vec::new();
        let mut blocks = Vec::new();
        for (block, fields) in FIXED_BLOCKS {
            blocks.push(BlockSpan {
                name: block.to_string(),
                start: names.len(),
                len: fields.len(),
            });
            names.extend(fields.iter().map(|s| s.to_string()));
        }
        blocks.push(BlockSpan {
            name: "bond_types".into(),
            start: names.len(),
            len: vocabulary.len(),
        });
        names.extend(vocabulary.iter().map(|k| format!("{BOND_PREFIX}{k}")));
        if include_density {
            blocks.push(BlockSpan {
                name: DENSITY_NAME.into(),
                start: names.len(),
                len: 1,
            });
            names.push(DENSITY_NAME.into());
        }
        FeatureSchema {
            version: SCHEMA_VERSION,
            pattern_table_version: PATTERN_TABLE_VERSION,
            names,
            blocks,
            vocabulary,
            include_density,
            includes_hydrogen_pseudo_bonds: true,
        }
    }

    /// Schema over already-parsed molecules. Independent of corpus order.
    pub fn from_graphs<'a>(
        corpus: impl IntoIterator<Item = &'a MolGraph>,
        include_density: bool,
    ) -> Self {
        FeatureSchema::new(fit_bond_vocabulary(corpus), include_density)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn to_manifest_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    /// Parses a manifest and checks it against the layout this build would
    /// produce for the same vocabulary.
    pub fn from_manifest_json(text: &str) -> Result<Self, DescriptorError> {
        let schema: FeatureSchema = serde_json::from_str(text)
            .map_err(|e| DescriptorError::InvalidSchema(e.to_string()))?;
        if schema.version != SCHEMA_VERSION {
            return Err(DescriptorError::InvalidSchema(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                schema.version
            )));
        }
        let rebuilt = FeatureSchema::new(schema.vocabulary.clone(), schema.include_density);
        if rebuilt != schema {
            return Err(DescriptorError::InvalidSchema(
                "layout does not match its vocabulary".into(),
            ));
        }
        Ok(schema)
    }
}

/// Parses every `(id, smiles)` pair and fits the schema.
pub fn fit_schema<'a>(
    corpus: impl IntoIterator<Item = (&'a str, &'a str)>,
    include_density: bool,
) -> Result<FeatureSchema, DescriptorError> {
    let mut graphs = Vec::new();
    for (id, smiles) in corpus {
        let g = parse_smiles(smiles).map_err(|source| DescriptorError::Parse {
            id: id.to_string(),
            source,
        })?;
        graphs.push(g);
    }
    if graphs.is_empty() {
        return Err(DescriptorError::EmptyCorpus);
    }
    Ok(FeatureSchema::from_graphs(&graphs, include_density))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVector {
    pub values: Vec<f64>,
}

pub fn featurize(
    g: &MolGraph,
    schema: &FeatureSchema,
    density: Option<f64>,
) -> Result<DescriptorVector, DescriptorError> {
    if g.fragment_count() != 1 {
        return Err(DescriptorError::MultiFragment(g.fragment_count()));
    }
    match (schema.include_density, density) {
        (true, None) => return Err(DescriptorError::MissingDensity),
        (false, Some(_)) => return Err(DescriptorError::UnexpectedDensity),
        (true, Some(d)) if !(d.is_finite() && d > 0.0) => {
            return Err(DescriptorError::InvalidDensity(d))
        }
        _ => {}
    }
    let mut values = fixed_block(g)?;
    values.extend(sum_over_bonds(g, &schema.vocabulary)?);
    if let Some(d) = density {
        values.push(d);
    }
    debug_assert_eq!(values.len(), schema.len());
    Ok(DescriptorVector { values })
}

/// Featurizes molecules concurrently; results keep input order.
pub fn featurize_all(
    items: &[(&MolGraph, Option<f64>)],
    schema: &FeatureSchema,
) -> Vec<Result<DescriptorVector, DescriptorError>> {
    items
        .par_iter()
        .map(|&(g, density)| featurize(g, schema, density))
        .collect()
}
