//! Turns a raw parse into a perceived [`MolGraph`]: bond orders resolved,
//! explicit hydrogens folded, nitro groups normalized, hydrogen counts
//! assigned and aromatic systems kekulized.

use std::collections::BTreeSet;

use super::smiles::{RawAtom, RawBond, RawGraph};
use super::{Atom, Bond, BondOrder, Element, MolGraph, SmilesError};

struct Working {
    atoms: Vec<RawAtom>,
    bonds: Vec<(usize, usize, BondOrder)>,
    /// Hydrogens absorbed from explicit `[H]` nodes.
    folded_h: Vec<u8>,
}

pub(crate) fn perceive(raw: RawGraph) -> Result<MolGraph, SmilesError> {
    let bonds = resolve_bonds(&raw.atoms, &raw.bonds)?;
    let mut work = fold_hydrogens(raw.atoms, bonds);
    normalize_nitro(&mut work);
    let (hydrogens, kekule) = assign_hydrogens(&work)?;

    let atoms = work
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| Atom {
            element: a.element,
            formal_charge: a.charge,
            aromatic: a.aromatic,
            implicit_h: hydrogens[i],
            index: i,
        })
        .collect();
    let bonds = work
        .bonds
        .iter()
        .zip(kekule)
        .map(|(&(a, b, order), kek)| Bond {
            atoms: (a, b),
            order,
            kekule: kek,
            in_ring: false,
        })
        .collect();
    let graph = MolGraph::assemble(atoms, bonds);

    for bond in graph.bonds() {
        if bond.order == BondOrder::Aromatic && !bond.in_ring {
            return Err(SmilesError::Kekulization(format!(
                "aromatic bond {}-{} is not in a ring",
                bond.atoms.0, bond.atoms.1
            )));
        }
    }
    Ok(graph)
}

fn resolve_bonds(
    atoms: &[RawAtom],
    raw: &[RawBond],
) -> Result<Vec<(usize, usize, BondOrder)>, SmilesError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for bond in raw {
        let key = (bond.a.min(bond.b), bond.a.max(bond.b));
        if !seen.insert(key) {
            return Err(SmilesError::Syntax {
                position: bond.position,
                message: format!("duplicate bond between atoms {} and {}", key.0, key.1),
            });
        }
        let both_aromatic = atoms[bond.a].aromatic && atoms[bond.b].aromatic;
        let order = match bond.order {
            None if both_aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
            Some(BondOrder::Aromatic) if !both_aromatic => {
                return Err(SmilesError::Syntax {
                    position: bond.position,
                    message: "aromatic bond between non-aromatic atoms".into(),
                })
            }
            Some(o) => o,
        };
        out.push((bond.a, bond.b, order));
    }
    Ok(out)
}

/// Neutral hydrogen nodes singly bonded to one heavy atom become hydrogen
/// counts on that atom. Other hydrogen nodes (H2, hydride, bridging) stay.
fn fold_hydrogens(atoms: Vec<RawAtom>, bonds: Vec<(usize, usize, BondOrder)>) -> Working {
    let n = atoms.len();
    let mut degree = vec![0usize; n];
    for &(a, b, _) in &bonds {
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut remove = vec![false; n];
    let mut folded = vec![0u8; n];
    for &(a, b, order) in &bonds {
        for (h, heavy) in [(a, b), (b, a)] {
            let ha = &atoms[h];
            if ha.element == Element::H
                && ha.charge == 0
                && ha.bracket_h.unwrap_or(0) == 0
                && degree[h] == 1
                && order == BondOrder::Single
                && atoms[heavy].element.is_heavy()
            {
                remove[h] = true;
                folded[heavy] = folded[heavy].saturating_add(1);
            }
        }
    }

    let mut remap = vec![usize::MAX; n];
    let mut kept_atoms = Vec::with_capacity(n);
    let mut kept_folded = Vec::with_capacity(n);
    for (i, atom) in atoms.into_iter().enumerate() {
        if !remove[i] {
            remap[i] = kept_atoms.len();
            kept_atoms.push(atom);
            kept_folded.push(folded[i]);
        }
    }
    let kept_bonds = bonds
        .into_iter()
        .filter(|&(a, b, _)| !remove[a] && !remove[b])
        .map(|(a, b, o)| (remap[a], remap[b], o))
        .collect();
    Working {
        atoms: kept_atoms,
        bonds: kept_bonds,
        folded_h: kept_folded,
    }
}

/// `N(=O)=O` becomes `[N+](=O)[O-]`; the later oxygen takes the charge.
fn normalize_nitro(work: &mut Working) {
    let n = work.atoms.len();
    let mut degree = vec![0usize; n];
    for &(a, b, _) in &work.bonds {
        degree[a] += 1;
        degree[b] += 1;
    }
    for nitrogen in 0..n {
        let atom = &work.atoms[nitrogen];
        if atom.element != Element::N || atom.charge != 0 || atom.aromatic {
            continue;
        }
        let oxo: Vec<(usize, usize)> = work
            .bonds
            .iter()
            .enumerate()
            .filter_map(|(bi, &(a, b, order))| {
                if order != BondOrder::Double || (a != nitrogen && b != nitrogen) {
                    return None;
                }
                let o = if a == nitrogen { b } else { a };
                let oa = &work.atoms[o];
                (oa.element == Element::O
                    && oa.charge == 0
                    && degree[o] == 1
                    && oa.bracket_h.unwrap_or(0) == 0)
                    .then_some((o, bi))
            })
            .collect();
        if oxo.len() != 2 {
            continue;
        }
        let &(oxygen, bond) = oxo.iter().max().expect("two oxo partners");
        work.bonds[bond].2 = BondOrder::Single;
        work.atoms[oxygen].charge = -1;
        if work.atoms[oxygen].bracket_h.is_none() {
            // The charge can no longer be expressed as an organic-subset atom.
            work.atoms[oxygen].bracket_h = Some(0);
        }
        work.atoms[nitrogen].charge = 1;
        if work.atoms[nitrogen].bracket_h.is_none() {
            work.atoms[nitrogen].bracket_h = Some(0);
        }
    }
}

fn valence_error(atom: usize, message: impl Into<String>) -> SmilesError {
    SmilesError::Valence {
        atom,
        message: message.into(),
    }
}

fn assign_hydrogens(work: &Working) -> Result<(Vec<u8>, Vec<BondOrder>), SmilesError> {
    let n = work.atoms.len();
    let mut sigma_order = vec![0i32; n];
    let mut aromatic_bonds = vec![0i32; n];
    for &(a, b, order) in &work.bonds {
        match order.multiplicity() {
            Some(m) => {
                sigma_order[a] += m;
                sigma_order[b] += m;
            }
            None => {
                aromatic_bonds[a] += 1;
                aromatic_bonds[b] += 1;
            }
        }
    }

    let mut hydrogens = vec![0u8; n];
    let mut needs_pi = vec![false; n];
    for (i, atom) in work.atoms.iter().enumerate() {
        let valence = atom.element.valence(atom.charge);
        if valence < 0 {
            return Err(valence_error(i, format!("charge {} is impossible", atom.charge)));
        }
        if atom.aromatic && aromatic_bonds[i] == 0 {
            return Err(SmilesError::Kekulization(format!(
                "aromatic atom {i} has no aromatic bonds"
            )));
        }
        let folded = i32::from(work.folded_h[i]);
        // Aromatic bonds count as single until the Kekulé structure is known.
        let free = valence - sigma_order[i] - aromatic_bonds[i];
        let h = match atom.bracket_h {
            Some(written) => {
                let h = i32::from(written) + folded;
                let rest = free - h;
                if atom.aromatic {
                    if !(0..=1).contains(&rest) {
                        return Err(valence_error(
                            i,
                            format!("aromatic {} cannot carry {h} hydrogens", atom.element),
                        ));
                    }
                    needs_pi[i] = rest == 1;
                } else if rest != 0 {
                    return Err(valence_error(
                        i,
                        format!(
                            "{} with charge {} has {} bonds and {h} hydrogens, expected valence {valence}",
                            atom.element,
                            atom.charge,
                            sigma_order[i] + aromatic_bonds[i]
                        ),
                    ));
                }
                h
            }
            None => {
                if free < 0 {
                    return Err(valence_error(
                        i,
                        format!("{} exceeds valence {valence}", atom.element),
                    ));
                }
                let h = if atom.aromatic && free >= 1 {
                    needs_pi[i] = true;
                    free - 1
                } else {
                    free
                };
                if h < folded {
                    return Err(valence_error(i, "too many explicit hydrogens"));
                }
                h
            }
        };
        hydrogens[i] = u8::try_from(h).map_err(|_| valence_error(i, "hydrogen count overflow"))?;
    }

    let mut kekule: Vec<BondOrder> = work.bonds.iter().map(|&(_, _, o)| o).collect();
    let pi_bonds = kekulize(work, &needs_pi)?;
    for (i, &(_, _, order)) in work.bonds.iter().enumerate() {
        if order == BondOrder::Aromatic {
            kekule[i] = if pi_bonds.contains(&i) {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
        }
    }
    Ok((hydrogens, kekule))
}

/// Perfect matching of π-deficient aromatic atoms over aromatic bonds.
/// Each component is solved by depth-first search that always extends the
/// lowest-index unmatched atom with its lowest-index free partner first, so
/// the chosen Kekulé structure is deterministic.
fn kekulize(work: &Working, needs_pi: &[bool]) -> Result<BTreeSet<usize>, SmilesError> {
    let n = work.atoms.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, &(a, b, order)) in work.bonds.iter().enumerate() {
        if order == BondOrder::Aromatic && needs_pi[a] && needs_pi[b] {
            adj[a].push((b, bi));
            adj[b].push((a, bi));
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut mate: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut visited = vec![false; n];
    for start in 0..n {
        if !needs_pi[start] || visited[start] {
            continue;
        }
        let mut component = vec![start];
        visited[start] = true;
        let mut i = 0;
        while i < component.len() {
            for &(m, _) in &adj[component[i]] {
                if !visited[m] {
                    visited[m] = true;
                    component.push(m);
                }
            }
            i += 1;
        }
        component.sort_unstable();
        if component.len() % 2 == 1 || !extend_matching(&component, &adj, &mut mate) {
            return Err(SmilesError::Kekulization(format!(
                "no Kekulé structure for the aromatic system containing atom {start}"
            )));
        }
    }
    Ok(mate.iter().flatten().map(|&(_, bond)| bond).collect())
}

fn extend_matching(
    component: &[usize],
    adj: &[Vec<(usize, usize)>],
    mate: &mut [Option<(usize, usize)>],
) -> bool {
    let Some(&atom) = component.iter().find(|&&a| mate[a].is_none()) else {
        return true;
    };
    // An unmatched atom without free partners dooms this branch.
    let stranded = component
        .iter()
        .any(|&a| mate[a].is_none() && adj[a].iter().all(|&(m, _)| mate[m].is_some()));
    if stranded {
        return false;
    }
    for &(partner, bond) in &adj[atom] {
        if mate[partner].is_some() {
            continue;
        }
        mate[atom] = Some((partner, bond));
        mate[partner] = Some((atom, bond));
        if extend_matching(component, adj, mate) {
            return true;
        }
        mate[atom] = None;
        mate[partner] = None;
    }
    false
}
