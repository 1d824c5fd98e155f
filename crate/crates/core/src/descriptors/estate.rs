//! Kier–Hall electrotopological state indices on the hydrogen-suppressed
//! graph, summed per element.

use crate::molgraph::{Element, MolGraph};

/// Sum of the terms in ascending order, independent of input order.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomEState {
    pub atom: usize,
    pub element: Element,
    pub intrinsic: f64,
    pub estate: f64,
}

/// Intrinsic state `((2/N)^2 dv + 1) / d`; zero for an isolated heavy atom.
pub fn intrinsic_state(g: &MolGraph, atom: usize) -> f64 {
    let a = &g.atoms()[atom];
    let delta = g.heavy_degree(atom);
    if delta == 0 {
        return 0.0;
    }
    let dv = f64::from(a.element.valence_electrons()) - f64::from(g.total_hydrogens(atom));
    let n = f64::from(a.element.principal_quantum_number());
    ((2.0 / n).powi(2) * dv + 1.0) / delta as f64
}

/// Per heavy atom, in atom index order.
pub fn atom_estates(g: &MolGraph) -> Vec<AtomEState> {
    let heavy: Vec<usize> = (0..g.atom_count())
        .filter(|&i| g.atoms()[i].element.is_heavy())
        .collect();
    let intrinsic: Vec<f64> = (0..g.atom_count())
        .map(|i| if g.atoms()[i].element.is_heavy() { intrinsic_state(g, i) } else { 0.0 })
        .collect();
    heavy
        .iter()
        .map(|&i| {
            let dist = g.distances_from(i);
            let perturbation = ordered_sum(
                heavy
                    .iter()
                    .filter(|&&j| j != i)
                    .filter_map(|&j| {
                        dist[j].map(|d| (intrinsic[i] - intrinsic[j]) / ((d + 1) as f64).powi(2))
                    })
                    .collect(),
            );
            AtomEState {
                atom: i,
                element: g.atoms()[i].element,
                intrinsic: intrinsic[i],
                estate: intrinsic[i] + perturbation,
            }
        })
        .collect()
}

pub const ESTATE_ELEMENTS: [Element; 5] =
    [Element::C, Element::N, Element::O, Element::F, Element::Cl];

/// `[S_C, S_N, S_O, S_F, S_Cl]`.
pub fn estate_vector(g: &MolGraph) -> [f64; 5] {
    let mut terms: [Vec<f64>; 5] = Default::default();
    for s in atom_estates(g) {
        if let Some(slot) = ESTATE_ELEMENTS.iter().position(|&e| e == s.element) {
            terms[slot].push(s.estate);
        }
    }
    terms.map(ordered_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    #[test]
    fn ethane() {
        let g = parse_smiles("CC").unwrap();
        let atoms = atom_estates(&g);
        for a in &atoms {
            assert_eq!(a.intrinsic, 2.0);
            assert_eq!(a.estate, 2.0);
        }
        assert_eq!(estate_vector(&g), [4.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn isolated_atom_is_zero() {
        assert_eq!(estate_vector(&parse_smiles("C").unwrap()), [0.0; 5]);
        assert_eq!(estate_vector(&parse_smiles("O").unwrap()), [0.0; 5]);
    }

    #[test]
    fn hand_computed_methanol_and_chloromethane() {
        // Methanol: C d=1 dv=1 I=2; O d=1 dv=5 I=6; d(C,O)=1.
        let g = parse_smiles("CO").unwrap();
        let s = estate_vector(&g);
        assert!((s[0] - (2.0 + (2.0 - 6.0) / 4.0)).abs() < 1e-12);
        assert!((s[2] - (6.0 + (6.0 - 2.0) / 4.0)).abs() < 1e-12);
        // Chloromethane: Cl dv=7, N=3, I=(4/9*7+1).
        let g = parse_smiles("CCl").unwrap();
        let i_cl = 4.0 / 9.0 * 7.0 + 1.0;
        let s = estate_vector(&g);
        assert!((s[4] - (i_cl + (i_cl - 2.0) / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn benzene_carbons_are_equivalent() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let states = atom_estates(&g);
        for a in &states {
            assert!((a.estate - states[0].estate).abs() < 1e-12);
        }
    }
}
