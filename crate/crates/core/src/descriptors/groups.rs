//! Fixed functional-group pattern table.
//!
//! Table version 1. Group counts are distinct matched atom sets.
//!
//! | group            | pattern                                            |
//! |------------------|----------------------------------------------------|
//! | nitro            | C-[N+](=O)[O-]                                     |
//! | nitramine        | N-[N+](=O)[O-]                                     |
//! | nitrate_ester    | O-[N+](=O)[O-], ester O with two heavy neighbors   |
//! | azide            | N=[N+]=[N-] or [N-]-[N+]#N, terminal N degree 1    |
//! | amino_primary    | C-NH2, neutral non-aromatic N                      |
//! | hydroxyl         | C-OH, neutral O                                    |
//! | carbonyl         | C=O, non-aromatic C, terminal neutral O            |
//! | cyano            | C#N, terminal N                                    |
//! | n_oxide          | [N+]-[O-] where the N has exactly one O neighbor   |
//! | acidic_carboxyl  | C(=O)OH                                            |
//! | acidic_phenol    | aromatic c-OH                                      |
//! | basic_amine      | predicate, see [`is_basic_amine`]                  |

use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::molgraph::{
    matches, AtomQuery, BondOrder, Element, MolGraph, SubstructurePattern,
};

pub const PATTERN_TABLE_VERSION: u32 = 1;

pub const FUNCTIONAL_GROUP_NAMES: [&str; 9] = [
    "nitro",
    "nitramine",
    "nitrate_ester",
    "azide",
    "amino_primary",
    "hydroxyl",
    "carbonyl",
    "cyano",
    "n_oxide",
];

/// A named group made of one or more alternative patterns. Matches of the
/// alternatives are unioned by atom set.
#[derive(Debug, Clone)]
pub struct GroupDefinition {
    pub name: &'static str,
    pub alternatives: Vec<SubstructurePattern>,
}

impl GroupDefinition {
    pub fn matches(&self, g: &MolGraph) -> BTreeSet<BTreeSet<usize>> {
        self.alternatives.iter().flat_map(|p| matches(g, p)).collect()
    }

    pub fn count(&self, g: &MolGraph) -> usize {
        self.matches(g).len()
    }
}

fn nitro_on(anchor: AtomQuery, name: &str) -> SubstructurePattern {
    SubstructurePattern::new(name)
        .atom(anchor)
        .atom(AtomQuery::element(Element::N).charge(1))
        .atom(AtomQuery::element(Element::O).charge(0).heavy_degree(1))
        .atom(AtomQuery::element(Element::O).charge(-1).heavy_degree(1))
        .bond(0, 1, BondOrder::Single)
        .bond(1, 2, BondOrder::Double)
        .bond(1, 3, BondOrder::Single)
}

fn single(name: &'static str, pattern: SubstructurePattern) -> GroupDefinition {
    GroupDefinition {
        name,
        alternatives: vec![pattern],
    }
}

/// The nine functional groups, in [`FUNCTIONAL_GROUP_NAMES`] order.
pub fn functional_group_table() -> &'static [GroupDefinition] {
    static TABLE: OnceLock<Vec<GroupDefinition>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = || AtomQuery::element(Element::N);
        let o = || AtomQuery::element(Element::O);
        let c = || AtomQuery::element(Element::C);
        vec![
            single("nitro", nitro_on(c(), "nitro")),
            single("nitramine", nitro_on(n().charge(0), "nitramine")),
            single(
                "nitrate_ester",
                nitro_on(o().charge(0).heavy_degree(2), "nitrate_ester"),
            ),
            GroupDefinition {
                name: "azide",
                alternatives: vec![
                    SubstructurePattern::new("azide_cumulated")
                        .atom(n().charge(0))
                        .atom(n().charge(1))
                        .atom(n().charge(-1).heavy_degree(1))
                        .bond(0, 1, BondOrder::Double)
                        .bond(1, 2, BondOrder::Double),
                    SubstructurePattern::new("azide_triple")
                        .atom(n().charge(-1))
                        .atom(n().charge(1))
                        .atom(n().charge(0).heavy_degree(1))
                        .bond(0, 1, BondOrder::Single)
                        .bond(1, 2, BondOrder::Triple),
                ],
            },
            single(
                "amino_primary",
                SubstructurePattern::new("amino_primary")
                    .atom(n().charge(0).aromatic(false).hydrogens(2).heavy_degree(1))
                    .atom(c())
                    .bond(0, 1, BondOrder::Single),
            ),
            single(
                "hydroxyl",
                SubstructurePattern::new("hydroxyl")
                    .atom(o().charge(0).hydrogens(1).heavy_degree(1))
                    .atom(c())
                    .bond(0, 1, BondOrder::Single),
            ),
            single(
                "carbonyl",
                SubstructurePattern::new("carbonyl")
                    .atom(c().aromatic(false))
                    .atom(o().charge(0).heavy_degree(1))
                    .bond(0, 1, BondOrder::Double),
            ),
            single(
                "cyano",
                SubstructurePattern::new("cyano")
                    .atom(c())
                    .atom(n().charge(0).heavy_degree(1))
                    .bond(0, 1, BondOrder::Triple),
            ),
            single(
                "n_oxide",
                SubstructurePattern::new("n_oxide")
                    .atom(n().charge(1).neighbors_of(Element::O, 1))
                    .atom(o().charge(-1).heavy_degree(1))
                    .bond(0, 1, BondOrder::Single),
            ),
        ]
    })
}

fn acid_table() -> &'static [GroupDefinition] {
    static TABLE: OnceLock<Vec<GroupDefinition>> = OnceLock::new();
    TABLE.get_or_init(|| {
        vec![
            single(
                "acidic_carboxyl",
                SubstructurePattern::new("acidic_carboxyl")
                    .atom(AtomQuery::element(Element::C))
                    .atom(AtomQuery::element(Element::O).charge(0).heavy_degree(1))
                    .atom(
                        AtomQuery::element(Element::O)
                            .charge(0)
                            .hydrogens(1)
                            .heavy_degree(1),
                    )
                    .bond(0, 1, BondOrder::Double)
                    .bond(0, 2, BondOrder::Single),
            ),
            single(
                "acidic_phenol",
                SubstructurePattern::new("acidic_phenol")
                    .atom(AtomQuery::element(Element::C).aromatic(true))
                    .atom(
                        AtomQuery::element(Element::O)
                            .charge(0)
                            .hydrogens(1)
                            .heavy_degree(1),
                    )
                    .bond(0, 1, BondOrder::Single),
            ),
        ]
    })
}

pub fn functional_group_counts(g: &MolGraph) -> Vec<(&'static str, usize)> {
    functional_group_table()
        .iter()
        .map(|def| (def.name, def.count(g)))
        .collect()
}

/// An amine nitrogen: neutral, non-aromatic, only single bonds, with at
/// least one hydrogen or two carbon neighbors, and not an amide, nitro or
/// nitramine nitrogen.
pub fn is_basic_amine(g: &MolGraph, atom: usize) -> bool {
    let a = &g.atoms()[atom];
    if a.element != Element::N || a.formal_charge != 0 || a.aromatic {
        return false;
    }
    let mut carbons = 0;
    for &(m, bond) in g.neighbors(atom) {
        if g.bonds()[bond].order != BondOrder::Single {
            return false;
        }
        let nb = &g.atoms()[m];
        match nb.element {
            Element::C => {
                carbons += 1;
                // Amide: the carbon carries a terminal C=O.
                let amide = g.neighbors(m).iter().any(|&(x, xb)| {
                    g.bonds()[xb].order == BondOrder::Double && g.atoms()[x].element == Element::O
                });
                if amide {
                    return false;
                }
            }
            // Nitramine: bonded to a nitro nitrogen.
            Element::N if nb.formal_charge == 1 => {
                let oxygens = g
                    .neighbors(m)
                    .iter()
                    .filter(|&&(x, _)| g.atoms()[x].element == Element::O)
                    .count();
                if oxygens >= 2 {
                    return false;
                }
            }
            _ => {}
        }
    }
    g.total_hydrogens(atom) >= 1 || carbons >= 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcidBaseCounts {
    pub acidic: usize,
    pub basic: usize,
}

pub fn acid_base_counts(g: &MolGraph) -> AcidBaseCounts {
    let acidic = acid_table().iter().map(|d| d.count(g)).sum();
    let basic = (0..g.atom_count()).filter(|&i| is_basic_amine(g, i)).count();
    AcidBaseCounts { acidic, basic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn counts(s: &str) -> Vec<usize> {
        functional_group_counts(&parse_smiles(s).unwrap())
            .into_iter()
            .map(|(_, c)| c)
            .collect()
    }

    fn group(s: &str, name: &str) -> usize {
        functional_group_counts(&parse_smiles(s).unwrap())
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1
    }

    #[test]
    fn table_order_matches_names() {
        let names: Vec<&str> = functional_group_table().iter().map(|d| d.name).collect();
        assert_eq!(names, FUNCTIONAL_GROUP_NAMES);
    }

    #[test]
    fn energetic_examples() {
        let tnt = "Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";
        assert_eq!(group(tnt, "nitro"), 3);
        assert_eq!(group(tnt, "amino_primary"), 0);
        let rdx = "C1N(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";
        assert_eq!(group(rdx, "nitramine"), 3);
        assert_eq!(group(rdx, "nitro"), 0);
        let tatb = "c1(c(c(c(c(c1N)[N+](=O)[O-])N)[N+](=O)[O-])N)[N+](=O)[O-]";
        assert_eq!(group(tatb, "nitro"), 3);
        assert_eq!(group(tatb, "amino_primary"), 3);
        let ng = "C(C(CO[N+](=O)[O-])O[N+](=O)[O-])O[N+](=O)[O-]";
        assert_eq!(counts(ng), vec![0, 0, 3, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn azide_spellings_agree() {
        assert_eq!(group("CN=[N+]=[N-]", "azide"), 1);
        assert_eq!(group("C[N-][N+]#N", "azide"), 1);
        assert_eq!(group("C(N=[N+]=[N-])N=[N+]=[N-]", "azide"), 2);
    }

    #[test]
    fn simple_groups() {
        assert_eq!(group("CO", "hydroxyl"), 1);
        assert_eq!(group("CC(=O)C", "carbonyl"), 1);
        assert_eq!(group("CC#N", "cyano"), 1);
        assert_eq!(group("C[N+](C)(C)[O-]", "n_oxide"), 1);
        assert_eq!(group("c1cc[n+]([O-])cc1", "n_oxide"), 1);
        // Nitro nitrogens have two oxygens and are not N-oxides.
        assert_eq!(group("C[N+](=O)[O-]", "n_oxide"), 0);
        assert_eq!(group("CN", "amino_primary"), 1);
        assert_eq!(group("CNC", "amino_primary"), 0);
    }

    #[test]
    fn acid_base() {
        let acetic = acid_base_counts(&parse_smiles("CC(=O)O").unwrap());
        assert_eq!(acetic, AcidBaseCounts { acidic: 1, basic: 0 });
        let methylamine = acid_base_counts(&parse_smiles("CN").unwrap());
        assert_eq!(methylamine, AcidBaseCounts { acidic: 0, basic: 1 });
        let benzene = acid_base_counts(&parse_smiles("c1ccccc1").unwrap());
        assert_eq!(benzene, AcidBaseCounts { acidic: 0, basic: 0 });
        let phenol = acid_base_counts(&parse_smiles("Oc1ccccc1").unwrap());
        assert_eq!(phenol.acidic, 1);
        let picric = "Oc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";
        assert_eq!(acid_base_counts(&parse_smiles(picric).unwrap()).acidic, 1);
        // Amide, nitramine and aromatic nitrogens are not basic.
        for s in ["CC(=O)N", "CN([N+](=O)[O-])C", "c1ccncc1", "C[N+](=O)[O-]"] {
            assert_eq!(acid_base_counts(&parse_smiles(s).unwrap()).basic, 0, "{s}");
        }
        assert_eq!(acid_base_counts(&parse_smiles("CN(C)C").unwrap()).basic, 1);
    }
}
