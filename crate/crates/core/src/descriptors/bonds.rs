//! Sum-over-bonds counts against a corpus-fitted bond-type vocabulary.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DescriptorError;
use crate::molgraph::{BondOrder, Element, MolGraph};

/// Bond type key. The two elements are stored sorted by symbol, so `H-C`
/// and `C-H` are the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BondKey {
    pub first: Element,
    pub second: Element,
    pub order: BondOrder,
}

impl BondKey {
    pub fn new(a: Element, b: Element, order: BondOrder) -> Self {
        let (first, second) = if a.symbol() <= b.symbol() { (a, b) } else { (b, a) };
        BondKey {
            first,
            second,
            order,
        }
    }

    fn sort_key(&self) -> (&'static str, &'static str, &'static str) {
        (self.first.symbol(), self.second.symbol(), self.order.name())
    }
}

impl Ord for BondKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for BondKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BondKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}:{}", self.first, self.second, self.order.name())
    }
}

impl FromStr for BondKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed bond key '{s}'");
        let (pair, order) = s.split_once(':').ok_or_else(bad)?;
        let (a, b) = pair.split_once('-').ok_or_else(bad)?;
        let a = Element::from_symbol(a).ok_or_else(bad)?;
        let b = Element::from_symbol(b).ok_or_else(bad)?;
        let order: BondOrder = order.parse().map_err(|_| bad())?;
        Ok(BondKey::new(a, b, order))
    }
}

impl TryFrom<String> for BondKey {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BondKey> for String {
    fn from(k: BondKey) -> String {
        k.to_string()
    }
}

/// Every bond type occurrence in `g`, with implicit hydrogens contributing
/// one `X-H` single bond each.
pub fn bond_keys(g: &MolGraph) -> Vec<BondKey> {
    let atoms = g.atoms();
    let mut keys: Vec<BondKey> = g
        .bonds()
        .iter()
        .map(|b| BondKey::new(atoms[b.atoms.0].element, atoms[b.atoms.1].element, b.order))
        .collect();
    for atom in atoms {
        for _ in 0..atom.implicit_h {
            keys.push(BondKey::new(atom.element, Element::H, BondOrder::Single));
        }
    }
    keys
}

/// Sorted set of bond types present anywhere in the corpus.
pub fn fit_bond_vocabulary<'a>(corpus: impl IntoIterator<Item = &'a MolGraph>) -> Vec<BondKey> {
    let set: BTreeSet<BondKey> = corpus.into_iter().flat_map(bond_keys).collect();
    set.into_iter().collect()
}

pub fn sum_over_bonds(g: &MolGraph, vocabulary: &[BondKey]) -> Result<Vec<f64>, DescriptorError> {
    let mut counts = vec![0.0; vocabulary.len()];
    for key in bond_keys(g) {
        let slot = vocabulary
            .binary_search(&key)
            .map_err(|_| DescriptorError::UnknownBondType(key.to_string()))?;
        counts[slot] += 1.0;
    }
    Ok(counts)
}
