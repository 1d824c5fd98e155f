//! Ring counts, topological counts and the additive van der Waals volume.

use crate::molgraph::{BondOrder, Element, MolGraph};

pub const RING_FEATURE_NAMES: [&str; 9] = [
    "ring_size_3",
    "ring_size_4",
    "ring_size_5",
    "ring_size_6",
    "ring_size_7",
    "ring_size_8",
    "ring_aromatic",
    "ring_aliphatic",
    "ring_hetero",
];

/// Counts over the SSSR in [`RING_FEATURE_NAMES`] order. Rings larger than
/// eight atoms only enter the class counts.
pub fn ring_count_features(g: &MolGraph) -> [f64; 9] {
    let mut out = [0.0; 9];
    for ring in g.rings() {
        if (3..=8).contains(&ring.size()) {
            out[ring.size() - 3] += 1.0;
        }
        if ring.aromatic {
            out[6] += 1.0;
        } else {
            out[7] += 1.0;
        }
        if ring.hetero {
            out[8] += 1.0;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyFeatures {
    pub rotatable_bonds: f64,
    pub aromatic_atoms: f64,
    pub aromatic_bonds: f64,
    pub hbond_donors: f64,
    pub hbond_acceptors: f64,
    pub bond_polarity_sum: f64,
}

impl TopologyFeatures {
    pub fn to_array(self) -> [f64; 6] {
        [
            self.rotatable_bonds,
            self.aromatic_atoms,
            self.aromatic_bonds,
            self.hbond_donors,
            self.hbond_acceptors,
            self.bond_polarity_sum,
        ]
    }
}

/// Bond polarity sums `|EN(a) - EN(b)|` over graph bonds and over each
/// implicit X-H bond.
pub fn topology_features(g: &MolGraph) -> TopologyFeatures {
    let atoms = g.atoms();
    let mut pair_counts = [[0usize; 6]; 6];
    let mut t = TopologyFeatures {
        rotatable_bonds: 0.0,
        aromatic_atoms: 0.0,
        aromatic_bonds: 0.0,
        hbond_donors: 0.0,
        hbond_acceptors: 0.0,
        bond_polarity_sum: 0.0,
    };
    for bond in g.bonds() {
        let (a, b) = bond.atoms;
        let heavy = atoms[a].element.is_heavy() && atoms[b].element.is_heavy();
        if bond.order == BondOrder::Single
            && !bond.in_ring
            && heavy
            && g.heavy_degree(a) >= 2
            && g.heavy_degree(b) >= 2
        {
            t.rotatable_bonds += 1.0;
        }
        if bond.order == BondOrder::Aromatic {
            t.aromatic_bonds += 1.0;
        }
        let (x, y) = (element_slot(atoms[a].element), element_slot(atoms[b].element));
        pair_counts[x.min(y)][x.max(y)] += 1;
    }
    for (i, atom) in atoms.iter().enumerate() {
        if atom.aromatic {
            t.aromatic_atoms += 1.0;
        }
        if matches!(atom.element, Element::N | Element::O) {
            t.hbond_acceptors += 1.0;
            if g.total_hydrogens(i) >= 1 {
                t.hbond_donors += 1.0;
            }
        }
        let (x, y) = (element_slot(atom.element), element_slot(Element::H));
        pair_counts[x.min(y)][x.max(y)] += usize::from(atom.implicit_h);
    }
    // Summed from per-pair counts in a fixed order so the result does not
    // depend on atom numbering.
    for (i, &x) in Element::ALL.iter().enumerate() {
        for (j, &y) in Element::ALL.iter().enumerate() {
            let n = pair_counts[i][j];
            if n > 0 {
                t.bond_polarity_sum +=
                    n as f64 * (x.electronegativity() - y.electronegativity()).abs();
            }
        }
    }
    t
}

fn element_slot(e: Element) -> usize {
    Element::ALL.iter().position(|&x| x == e).expect("known element")
}

/// Atomic contributions to the van der Waals volume in cubic ångström,
/// from Zhao, Abraham and Zissimos, J. Org. Chem. 68 (2003) 7368.
pub fn atomic_vdw_contribution(element: Element) -> f64 {
    match element {
        Element::H => 7.24,
        Element::C => 20.58,
        Element::N => 15.60,
        Element::O => 14.71,
        Element::F => 13.31,
        Element::Cl => 22.45,
    }
}

pub const VDW_BOND_CORRECTION: f64 = 5.92;
pub const VDW_AROMATIC_RING_CORRECTION: f64 = 14.7;
pub const VDW_NONAROMATIC_RING_CORRECTION: f64 = 3.8;

/// Bonds include every X-H bond; ring counts come from the SSSR.
pub fn vdw_volume(g: &MolGraph) -> f64 {
    let mut element_counts = [0usize; 6];
    let mut n_bonds = g.bond_count();
    for atom in g.atoms() {
        element_counts[element_slot(atom.element)] += 1;
        element_counts[element_slot(Element::H)] += usize::from(atom.implicit_h);
        n_bonds += usize::from(atom.implicit_h);
    }
    let volume: f64 = Element::ALL
        .iter()
        .zip(element_counts)
        .map(|(&e, n)| n as f64 * atomic_vdw_contribution(e))
        .sum();
    let n_bonds = n_bonds as f64;
    let aromatic = g.rings().iter().filter(|r| r.aromatic).count() as f64;
    let nonaromatic = g.rings().len() as f64 - aromatic;
    volume
        - VDW_BOND_CORRECTION * n_bonds
        - VDW_AROMATIC_RING_CORRECTION * aromatic
        - VDW_NONAROMATIC_RING_CORRECTION * nonaromatic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn mol(s: &str) -> MolGraph {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn ring_examples() {
        let benzene = ring_count_features(&mol("c1ccccc1"));
        assert_eq!(benzene, [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let rdx = ring_count_features(&mol("C1N(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]"));
        assert_eq!(rdx, [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(ring_count_features(&mol("CCCC")), [0.0; 9]);
    }

    #[test]
    fn topology_examples() {
        assert_eq!(topology_features(&mol("CCCC")).rotatable_bonds, 1.0);
        let water = topology_features(&mol("O"));
        assert_eq!((water.hbond_donors, water.hbond_acceptors), (1.0, 1.0));
        let benzene = topology_features(&mol("c1ccccc1"));
        assert_eq!(
            (benzene.aromatic_atoms, benzene.aromatic_bonds, benzene.rotatable_bonds),
            (6.0, 6.0, 0.0)
        );
        // Six C-H bonds at |2.55 - 2.20|.
        assert!((benzene.bond_polarity_sum - 6.0 * 0.35).abs() < 1e-12);
    }

    #[test]
    fn vdw_examples() {
        assert!((vdw_volume(&mol("C")) - 25.86).abs() < 1e-9);
        assert!((vdw_volume(&mol("N#N")) - 25.28).abs() < 1e-9);
        let benzene = 6.0 * 20.58 + 6.0 * 7.24 - 12.0 * 5.92 - 14.7;
        assert!((vdw_volume(&mol("c1ccccc1")) - benzene).abs() < 1e-9);
        let parts = vdw_volume(&mol("CCO")) + vdw_volume(&mol("C1CC1"));
        assert!((vdw_volume(&mol("CCO.C1CC1")) - parts).abs() < 1e-9);
    }
}
