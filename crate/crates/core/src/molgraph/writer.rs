//! Non-canonical SMILES emission. Every atom is written in brackets with its
//! hydrogen count and charge, so the output reparses to the same graph.

use std::collections::BTreeMap;

use super::{BondOrder, MolGraph};

#[derive(Debug, Clone, Copy, Default)]
pub struct WriteOptions {
    /// Emit the Kekulé structure with uppercase atoms instead of aromatic
    /// notation.
    pub kekule: bool,
    /// Atom the traversal starts from (its fragment is written first).
    pub root: usize,
    /// Visit neighbors in descending instead of ascending index order.
    pub reverse_neighbors: bool,
}

pub fn to_smiles(g: &MolGraph, options: WriteOptions) -> String {
    let n = g.atom_count();
    if n == 0 {
        return String::new();
    }
    let root = options.root.min(n - 1);
    let mut visited = vec![false; n];
    let mut fragments = Vec::new();
    for start in std::iter::once(root).chain(0..n) {
        if visited[start] {
            continue;
        }
        let mut w = Writer {
            g,
            options,
            visited: &mut visited,
            closures: vec![Vec::new(); n],
            tree_children: vec![Vec::new(); n],
            digits: BTreeMap::new(),
            out: String::new(),
        };
        w.plan(start, None);
        w.emit(start);
        fragments.push(w.out);
    }
    fragments.join(".")
}

struct Writer<'a> {
    g: &'a MolGraph,
    options: WriteOptions,
    visited: &'a mut Vec<bool>,
    /// Ring-closure bonds per atom, in discovery order.
    closures: Vec<Vec<usize>>,
    tree_children: Vec<Vec<(usize, usize)>>,
    /// Open closure bond -> digit.
    digits: BTreeMap<usize, u32>,
    out: String,
}

impl Writer<'_> {
    fn ordered_neighbors(&self, atom: usize) -> Vec<(usize, usize)> {
        let mut list = self.g.neighbors(atom).to_vec();
        if self.options.reverse_neighbors {
            list.reverse();
        }
        list
    }

    fn plan(&mut self, atom: usize, via: Option<usize>) {
        self.visited[atom] = true;
        for (next, bond) in self.ordered_neighbors(atom) {
            if Some(bond) == via {
                continue;
            }
            if self.visited[next] {
                if !self.closures[atom].contains(&bond) {
                    self.closures[atom].push(bond);
                    self.closures[next].push(bond);
                }
            } else {
                self.tree_children[atom].push((next, bond));
                self.plan(next, Some(bond));
            }
        }
    }

    fn bond_symbol(&self, bond: usize) -> &'static str {
        let b = &self.g.bonds()[bond];
        let (x, y) = b.atoms;
        let order = if self.options.kekule { b.kekule } else { b.order };
        match order {
            BondOrder::Single => {
                let both_aromatic = self.g.atoms()[x].aromatic && self.g.atoms()[y].aromatic;
                if both_aromatic && !self.options.kekule {
                    "-"
                } else {
                    ""
                }
            }
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => "",
        }
    }

    fn atom_text(&self, atom: usize) -> String {
        let a = &self.g.atoms()[atom];
        let mut s = String::from("[");
        let symbol = a.element.symbol();
        if a.aromatic && !self.options.kekule {
            s.push_str(&symbol.to_lowercase());
        } else {
            s.push_str(symbol);
        }
        match a.implicit_h {
            0 => {}
            1 => s.push('H'),
            h => s.push_str(&format!("H{h}")),
        }
        match a.formal_charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            q if q > 0 => s.push_str(&format!("+{q}")),
            q => s.push_str(&format!("-{}", -q)),
        }
        s.push(']');
        s
    }

    fn emit(&mut self, atom: usize) {
        let text = self.atom_text(atom);
        self.out.push_str(&text);
        for bond in self.closures[atom].clone() {
            match self.digits.remove(&bond) {
                Some(d) => push_digit(&mut self.out, d),
                None => {
                    let used: Vec<u32> = self.digits.values().copied().collect();
                    let d = (1..).find(|d| !used.contains(d)).expect("free ring digit");
                    let sym = self.bond_symbol(bond);
                    self.out.push_str(sym);
                    push_digit(&mut self.out, d);
                    self.digits.insert(bond, d);
                }
            }
        }
        let children = self.tree_children[atom].clone();
        let last = children.len().saturating_sub(1);
        for (i, (child, bond)) in children.into_iter().enumerate() {
            let branch = i < last;
            if branch {
                self.out.push('(');
            }
            let sym = self.bond_symbol(bond);
            self.out.push_str(sym);
            self.emit(child);
            if branch {
                self.out.push(')');
            }
        }
    }
}

fn push_digit(out: &mut String, d: u32) {
    if d < 10 {
        out.push_str(&d.to_string());
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}
