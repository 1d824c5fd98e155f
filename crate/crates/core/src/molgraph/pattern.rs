//! Small connected query graphs matched by backtracking.

use std::collections::{BTreeSet, VecDeque};

use super::{BondOrder, Element, MolGraph};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomQuery {
    pub element: Option<Element>,
    pub charge: Option<i8>,
    pub aromatic: Option<bool>,
    /// Exact attached hydrogen count.
    pub hydrogens: Option<u32>,
    pub min_hydrogens: Option<u32>,
    /// Exact number of non-hydrogen neighbors.
    pub heavy_degree: Option<usize>,
    /// Exact number of neighbors of the given element.
    pub neighbors_of: Option<(Element, usize)>,
}

impl AtomQuery {
    pub fn element(element: Element) -> Self {
        AtomQuery {
            element: Some(element),
            ..Default::default()
        }
    }

    pub fn charge(mut self, charge: i8) -> Self {
        self.charge = Some(charge);
        self
    }

    pub fn aromatic(mut self, aromatic: bool) -> Self {
        self.aromatic = Some(aromatic);
        self
    }

    pub fn hydrogens(mut self, n: u32) -> Self {
        self.hydrogens = Some(n);
        self
    }

    pub fn min_hydrogens(mut self, n: u32) -> Self {
        self.min_hydrogens = Some(n);
        self
    }

    pub fn heavy_degree(mut self, n: usize) -> Self {
        self.heavy_degree = Some(n);
        self
    }

    pub fn neighbors_of(mut self, element: Element, n: usize) -> Self {
        self.neighbors_of = Some((element, n));
        self
    }

    fn accepts(&self, g: &MolGraph, atom: usize) -> bool {
        let a = &g.atoms()[atom];
        if self.element.is_some_and(|e| e != a.element)
            || self.charge.is_some_and(|c| c != a.formal_charge)
            || self.aromatic.is_some_and(|x| x != a.aromatic)
            || self.heavy_degree.is_some_and(|d| d != g.heavy_degree(atom))
        {
            return false;
        }
        if self.hydrogens.is_some() || self.min_hydrogens.is_some() {
            let h = g.total_hydrogens(atom);
            if self.hydrogens.is_some_and(|n| n != h) || self.min_hydrogens.is_some_and(|n| h < n) {
                return false;
            }
        }
        if let Some((element, n)) = self.neighbors_of {
            let count = g
                .neighbors(atom)
                .iter()
                .filter(|&&(m, _)| g.atoms()[m].element == element)
                .count();
            if count != n {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondQuery {
    Any,
    Order(BondOrder),
}

impl BondQuery {
    fn accepts(self, order: BondOrder) -> bool {
        match self {
            BondQuery::Any => true,
            BondQuery::Order(o) => o == order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstructurePattern {
    pub name: String,
    pub atoms: Vec<AtomQuery>,
    pub bonds: Vec<(usize, usize, BondQuery)>,
}

impl SubstructurePattern {
    pub fn new(name: impl Into<String>) -> Self {
        SubstructurePattern {
            name: name.into(),
            atoms: Vec::new(),
            bonds: Vec::new(),
        }
    }

    pub fn atom(mut self, query: AtomQuery) -> Self {
        self.atoms.push(query);
        self
    }

    pub fn bond(mut self, a: usize, b: usize, order: BondOrder) -> Self {
        self.bonds.push((a, b, BondQuery::Order(order)));
        self
    }

    pub fn any_bond(mut self, a: usize, b: usize) -> Self {
        self.bonds.push((a, b, BondQuery::Any));
        self
    }

    /// Pattern atoms in BFS order from atom 0, each with the already-placed
    /// atom it hangs from.
    fn search_order(&self) -> Vec<(usize, Option<usize>)> {
        let n = self.atoms.len();
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        for root in 0..n {
            if placed[root] {
                continue;
            }
            placed[root] = true;
            queue.push_back((root, None));
            while let Some((a, via)) = queue.pop_front() {
                order.push((a, via));
                for &(x, y, _) in &self.bonds {
                    let next = if x == a { y } else if y == a { x } else { continue };
                    if !placed[next] {
                        placed[next] = true;
                        queue.push_back((next, Some(a)));
                    }
                }
            }
        }
        order
    }
}

/// Distinct embeddings of `pattern` in `g`, identified by matched atom set.
pub fn matches(g: &MolGraph, pattern: &SubstructurePattern) -> BTreeSet<BTreeSet<usize>> {
    let mut found = BTreeSet::new();
    if pattern.atoms.is_empty() {
        return found;
    }
    let order = pattern.search_order();
    let mut mapping = vec![usize::MAX; pattern.atoms.len()];
    let mut used = vec![false; g.atom_count()];
    extend(g, pattern, &order, 0, &mut mapping, &mut used, &mut found);
    found
}

pub fn match_pattern(g: &MolGraph, pattern: &SubstructurePattern) -> usize {
    matches(g, pattern).len()
}

fn extend(
    g: &MolGraph,
    pattern: &SubstructurePattern,
    order: &[(usize, Option<usize>)],
    depth: usize,
    mapping: &mut [usize],
    used: &mut [bool],
    found: &mut BTreeSet<BTreeSet<usize>>,
) {
    if depth == order.len() {
        found.insert(mapping.iter().copied().collect());
        return;
    }
    let (patom, anchor) = order[depth];
    let candidates: Vec<usize> = match anchor {
        Some(p) => g.neighbors(mapping[p]).iter().map(|&(n, _)| n).collect(),
        None => (0..g.atom_count()).collect(),
    };
    for target in candidates {
        if used[target] || !pattern.atoms[patom].accepts(g, target) {
            continue;
        }
        let bonds_ok = pattern.bonds.iter().all(|&(x, y, q)| {
            let other = if x == patom {
                y
            } else if y == patom {
                x
            } else {
                return true;
            };
            if mapping[other] == usize::MAX {
                return true;
            }
            g.bond_between(target, mapping[other])
                .is_some_and(|b| q.accepts(b.order))
        });
        if !bonds_ok {
            continue;
        }
        mapping[patom] = target;
        used[target] = true;
        extend(g, pattern, order, depth + 1, mapping, used, found);
        used[target] = false;
        mapping[patom] = usize::MAX;
    }
}
