//! Molecular graphs for CHNOClF molecules: SMILES parsing, hydrogen and
//! aromaticity perception, ring perception and substructure matching.

mod pattern;
mod perceive;
mod rings;
mod smiles;
mod writer;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pattern::{match_pattern, matches, AtomQuery, BondQuery, SubstructurePattern};
pub use rings::sssr_rings;
pub use writer::{to_smiles, WriteOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("unsupported element '{symbol}' at position {position}")]
    UnsupportedElement { symbol: String, position: usize },
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },
    #[error("kekulization failed: {0}")]
    Kekulization(String),
}

impl SmilesError {
    pub fn code(&self) -> &'static str {
        match self {
            SmilesError::UnsupportedElement { .. } => "UnsupportedElement",
            SmilesError::Syntax { .. } => "SyntaxError",
            SmilesError::Valence { .. } => "ValenceError",
            SmilesError::Kekulization(_) => "KekulizationError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    C,
    H,
    N,
    O,
    Cl,
    F,
}

impl Element {
    pub const ALL: [Element; 6] = [
        Element::C,
        Element::H,
        Element::N,
        Element::O,
        Element::Cl,
        Element::F,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::H => "H",
            Element::N => "N",
            Element::O => "O",
            Element::Cl => "Cl",
            Element::F => "F",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        Some(match symbol {
            "C" => Element::C,
            "H" => Element::H,
            "N" => Element::N,
            "O" => Element::O,
            "Cl" => Element::Cl,
            "F" => Element::F,
            _ => return None,
        })
    }

    pub fn is_heavy(self) -> bool {
        self != Element::H
    }

    pub fn valence_electrons(self) -> i32 {
        match self {
            Element::H => 1,
            Element::C => 4,
            Element::N => 5,
            Element::O => 6,
            Element::F | Element::Cl => 7,
        }
    }

    pub fn principal_quantum_number(self) -> i32 {
        match self {
            Element::H => 1,
            Element::C | Element::N | Element::O | Element::F => 2,
            Element::Cl => 3,
        }
    }

    /// Pauling electronegativity.
    pub fn electronegativity(self) -> f64 {
        match self {
            Element::H => 2.20,
            Element::C => 2.55,
            Element::N => 3.04,
            Element::O => 3.44,
            Element::F => 3.98,
            Element::Cl => 3.16,
        }
    }

    /// Bonding capacity for a given formal charge. Carbon and hydrogen lose
    /// one bond per unit of charge either way; N, O and the halogens gain a
    /// bond per positive charge and lose one per negative charge
    /// ([N+] 4, [O-] 1).
    pub fn valence(self, charge: i8) -> i32 {
        let q = i32::from(charge);
        match self {
            Element::C => 4 - q.abs(),
            Element::H => 1 - q.abs(),
            Element::N => 3 + q,
            Element::O => 2 + q,
            Element::F | Element::Cl => 1 + q,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::from_symbol(s).ok_or_else(|| format!("unknown element '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        }
    }

    /// Electron pairs shared; aromatic bonds must be resolved through the
    /// Kekulé assignment first.
    pub fn multiplicity(self) -> Option<i32> {
        match self {
            BondOrder::Single => Some(1),
            BondOrder::Double => Some(2),
            BondOrder::Triple => Some(3),
            BondOrder::Aromatic => None,
        }
    }
}

impl FromStr for BondOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(BondOrder::Single),
            "double" => Ok(BondOrder::Double),
            "triple" => Ok(BondOrder::Triple),
            "aromatic" => Ok(BondOrder::Aromatic),
            other => Err(format!("unknown bond order '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Hydrogens attached to this atom that are not graph nodes.
    pub implicit_h: u8,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub atoms: (usize, usize),
    pub order: BondOrder,
    /// Order in the Kekulé structure; equals `order` for non-aromatic bonds.
    pub kekule: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.atoms.0 == atom {
            self.atoms.1
        } else {
            self.atoms.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    /// Atoms in cyclic order, starting from the lowest index.
    pub atoms: Vec<usize>,
    pub bonds: Vec<usize>,
    pub aromatic: bool,
    pub hetero: bool,
}

impl Ring {
    pub fn size(&self) -> usize {
        self.atoms.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementCounts {
    pub n_c: u32,
    pub n_h: u32,
    pub n_n: u32,
    pub n_o: u32,
    pub n_cl: u32,
    pub n_f: u32,
    pub n_atoms: u32,
}

/// A perceived molecule. Immutable once built by [`parse_smiles`].
#[derive(Debug, Clone)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    rings: Vec<Ring>,
    adjacency: Vec<Vec<(usize, usize)>>,
    fragments: usize,
}

pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let raw = smiles::parse(text)?;
    perceive::perceive(raw)
}

impl FromStr for MolGraph {
    type Err = SmilesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_smiles(s)
    }
}

impl MolGraph {
    pub(crate) fn assemble(atoms: Vec<Atom>, mut bonds: Vec<Bond>) -> MolGraph {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.atoms.0].push((b.atoms.1, i));
            adjacency[b.atoms.1].push((b.atoms.0, i));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let fragments = count_components(&adjacency);
        let cycles = rings::minimum_cycle_basis(atoms.len(), &bonds, &adjacency, fragments);
        for cycle in &cycles {
            for &b in &cycle.1 {
                bonds[b].in_ring = true;
            }
        }
        let rings = cycles
            .into_iter()
            .map(|(ring_atoms, ring_bonds)| {
                let aromatic = ring_atoms.iter().all(|&a| atoms[a].aromatic)
                    && ring_bonds.iter().all(|&b| bonds[b].order == BondOrder::Aromatic);
                let hetero = ring_atoms.iter().any(|&a| atoms[a].element != Element::C);
                Ring {
                    atoms: ring_atoms,
                    bonds: ring_bonds,
                    aromatic,
                    hetero,
                }
            })
            .collect();
        MolGraph {
            atoms,
            bonds,
            rings,
            adjacency,
            fragments,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// SSSR computed at perception time.
    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    /// `(neighbor atom, bond index)` pairs, sorted by neighbor.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn fragment_count(&self) -> usize {
        self.fragments
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, idx)| &self.bonds[idx])
    }

    /// Neighbors that are graph nodes and not hydrogen.
    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.adjacency[atom]
            .iter()
            .filter(|&&(n, _)| self.atoms[n].element.is_heavy())
            .count()
    }

    /// Hydrogens on an atom, whether implicit or explicit graph nodes.
    pub fn total_hydrogens(&self, atom: usize) -> u32 {
        let explicit = self.adjacency[atom]
            .iter()
            .filter(|&&(n, _)| self.atoms[n].element == Element::H)
            .count() as u32;
        u32::from(self.atoms[atom].implicit_h) + explicit
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom]
            .iter()
            .any(|&(_, b)| self.bonds[b].in_ring)
    }

    pub fn molecular_formula(&self) -> ElementCounts {
        molecular_formula(self)
    }

    /// Shortest-path edge counts from `source`; `None` for other fragments.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.atoms.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(a) = queue.pop_front() {
            let d = dist[a].unwrap_or(0);
            for &(n, _) in &self.adjacency[a] {
                if dist[n].is_none() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

pub fn molecular_formula(g: &MolGraph) -> ElementCounts {
    let mut c = ElementCounts::default();
    for atom in &g.atoms {
        match atom.element {
            Element::C => c.n_c += 1,
            Element::H => c.n_h += 1,
            Element::N => c.n_n += 1,
            Element::O => c.n_o += 1,
            Element::Cl => c.n_cl += 1,
            Element::F => c.n_f += 1,
        }
        c.n_h += u32::from(atom.implicit_h);
    }
    c.n_atoms = c.n_c + c.n_h + c.n_n + c.n_o + c.n_cl + c.n_f;
    c
}

fn count_components(adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut components = 0;
    for start in 0..adjacency.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(a) = stack.pop() {
            for &(n, _) in &adjacency[a] {
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;

    const TNT: &str = "Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";
    const RDX: &str = "C1N(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";

    fn formula(s: &str) -> ElementCounts {
        parse_smiles(s).unwrap().molecular_formula()
    }

    #[test]
    fn methane() {
        let g = parse_smiles("C").unwrap();
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.bond_count(), 0);
        assert_eq!(g.atoms()[0].implicit_h, 4);
        let f = g.molecular_formula();
        assert_eq!((f.n_c, f.n_h, f.n_atoms), (1, 4, 5));
    }

    #[test]
    fn carbon_dioxide() {
        let g = parse_smiles("O=C=O").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Double));
        let f = g.molecular_formula();
        assert_eq!((f.n_c, f.n_o, f.n_h), (1, 2, 0));
    }

    #[test]
    fn tnt_formula_and_ring() {
        let g = parse_smiles(TNT).unwrap();
        let f = g.molecular_formula();
        assert_eq!((f.n_c, f.n_h, f.n_n, f.n_o, f.n_atoms), (7, 5, 3, 6, 21));
        assert_eq!(g.rings().len(), 1);
        assert_eq!(g.rings()[0].size(), 6);
        assert!(g.rings()[0].aromatic);
    }

    #[test]
    fn benzene_and_rdx_formulas() {
        let f = formula("c1ccccc1");
        assert_eq!((f.n_c, f.n_h, f.n_atoms), (6, 6, 12));
        let f = formula(RDX);
        assert_eq!((f.n_c, f.n_h, f.n_n, f.n_o, f.n_atoms), (3, 6, 6, 6, 21));
    }

    #[test]
    fn kekule_assignment_alternates() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let doubles = g
            .bonds()
            .iter()
            .filter(|b| b.kekule == BondOrder::Double)
            .count();
        assert_eq!(doubles, 3);
        for a in 0..6 {
            let d = g
                .neighbors(a)
                .iter()
                .filter(|&&(_, b)| g.bonds()[b].kekule == BondOrder::Double)
                .count();
            assert_eq!(d, 1);
        }
    }

    #[test]
    fn valence_sum_holds_after_perception() {
        for s in [TNT, RDX, "c1cc[nH]c1", "Cn1cccc1", "c1ccncc1", "[O-][N+](=O)c1nonc1", "CN=[N+]=[N-]"] {
            let g = parse_smiles(s).unwrap();
            for atom in g.atoms() {
                let bonded: i32 = g
                    .neighbors(atom.index)
                    .iter()
                    .map(|&(_, b)| g.bonds()[b].kekule.multiplicity().unwrap())
                    .sum();
                assert_eq!(
                    bonded + i32::from(atom.implicit_h),
                    atom.element.valence(atom.formal_charge),
                    "{s} atom {}",
                    atom.index
                );
            }
        }
    }

    #[test]
    fn neutral_nitro_normalized_to_charge_separated() {
        let a = parse_smiles("CN(=O)=O").unwrap();
        let b = parse_smiles("C[N+](=O)[O-]").unwrap();
        assert_eq!(a.atoms(), b.atoms());
        assert_eq!(a.bonds(), b.bonds());
    }

    #[test]
    fn explicit_hydrogens_fold_into_heavy_atoms() {
        let g = parse_smiles("[H]C([H])([H])[H]").unwrap();
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.atoms()[0].implicit_h, 4);
        let h2 = parse_smiles("[H][H]").unwrap();
        assert_eq!(h2.atom_count(), 2);
        assert_eq!(h2.molecular_formula().n_h, 2);
    }

    #[test]
    fn bracket_atoms_and_charges() {
        let g = parse_smiles("[NH4+]").unwrap();
        assert_eq!(g.atoms()[0].implicit_h, 4);
        assert_eq!(g.atoms()[0].formal_charge, 1);
        let g = parse_smiles("C[O-]").unwrap();
        assert_eq!(g.atoms()[1].implicit_h, 0);
        let g = parse_smiles("[NH2]C").unwrap();
        assert_eq!(g.atoms()[0].implicit_h, 2);
    }

    #[test]
    fn stereo_tokens_ignored() {
        let a = parse_smiles("F/C=C/F").unwrap();
        let b = parse_smiles("FC=CF").unwrap();
        assert_eq!(a.bonds(), b.bonds());
        let c = parse_smiles("N[C@@H](C)O").unwrap();
        let d = parse_smiles("NC(C)O").unwrap();
        assert_eq!(c.atoms(), d.atoms());
    }

    #[test]
    fn ring_closure_variants() {
        let a = parse_smiles("C1CCCCC1").unwrap();
        let b = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(a.bonds(), b.bonds());
        let c = parse_smiles("C=1CCCCC1").unwrap();
        let d = parse_smiles("C1CCCCC=1").unwrap();
        assert_eq!(c.bonds(), d.bonds());
        assert!(c.bonds().iter().any(|b| b.order == BondOrder::Double));
    }

    #[test]
    fn multi_fragment() {
        let g = parse_smiles("C.O").unwrap();
        assert_eq!(g.fragment_count(), 2);
        assert_eq!(g.bond_count(), 0);
    }

    #[test]
    fn error_paths() {
        let code = |s: &str| parse_smiles(s).unwrap_err().code();
        assert_eq!(code("CBr"), "UnsupportedElement");
        assert_eq!(code("CS"), "UnsupportedElement");
        assert_eq!(code("[Na+].[Cl-]"), "UnsupportedElement");
        assert_eq!(code("*C"), "UnsupportedElement");
        assert_eq!(code(""), "SyntaxError");
        assert_eq!(code("C(C"), "SyntaxError");
        assert_eq!(code("CC)"), "SyntaxError");
        assert_eq!(code("C1CC"), "SyntaxError");
        assert_eq!(code("[CH3"), "SyntaxError");
        assert_eq!(code("[13CH4]"), "SyntaxError");
        assert_eq!(code("C="), "SyntaxError");
        assert_eq!(code("C11"), "SyntaxError");
        assert_eq!(code("C12CC12"), "SyntaxError");
        assert_eq!(code("C=1CCCCC#1"), "SyntaxError");
        assert_eq!(code("C:C"), "SyntaxError");
        assert_eq!(code("C(=C)(=C)=C"), "ValenceError");
        assert_eq!(code("O(C)(C)C"), "ValenceError");
        assert_eq!(code("[CH5]"), "ValenceError");
        assert_eq!(code("c1cccc1"), "KekulizationError");
        assert_eq!(code("c1ccccc1c"), "KekulizationError");
        assert_eq!(code("c1cccn1"), "KekulizationError");
    }

    #[test]
    fn aromatic_heterocycles() {
        let pyrrole = parse_smiles("c1cc[nH]c1").unwrap();
        let f = pyrrole.molecular_formula();
        assert_eq!((f.n_c, f.n_h, f.n_n), (4, 5, 1));
        let pyridine = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(pyridine.molecular_formula().n_h, 5);
        let furan = parse_smiles("c1ccoc1").unwrap();
        assert_eq!(furan.molecular_formula().n_h, 4);
        let azulene = parse_smiles("c1cc2cccccc2c1").unwrap();
        assert_eq!(azulene.molecular_formula().n_h, 8);
        assert_eq!(azulene.rings().len(), 2);
    }
}
