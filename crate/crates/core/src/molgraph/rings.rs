//! Smallest set of smallest rings as a minimum cycle basis.
//!
//! Candidates are Horton cycles: for every root `v` (with a BFS tree whose
//! parents are the lowest-index shortest-path predecessors) and every edge
//! `(x, y)`, the cycle `P(v,x) + (x,y) + P(y,v)` when the two tree paths meet
//! only at `v`. Candidates are taken shortest first and kept when linearly
//! independent over GF(2) from those already kept, until the basis reaches
//! the cyclomatic number `E - V + C`.

use std::collections::{HashSet, VecDeque};

use super::{Bond, MolGraph, Ring};

/// Returns the SSSR of `g`. Equivalent to [`MolGraph::rings`], which is
/// filled at perception time.
pub fn sssr_rings(g: &MolGraph) -> Vec<Ring> {
    g.rings().to_vec()
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct EdgeSet(Vec<u64>);

impl EdgeSet {
    fn new(n_edges: usize) -> Self {
        EdgeSet(vec![0; n_edges.div_ceil(64)])
    }
    fn set(&mut self, e: usize) {
        self.0[e / 64] |= 1 << (e % 64);
    }
    fn get(&self, e: usize) -> bool {
        self.0[e / 64] >> (e % 64) & 1 == 1
    }
    fn xor(&mut self, other: &EdgeSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
    fn lowest(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Incremental GF(2) row echelon form keyed by pivot bit.
struct Basis {
    rows: Vec<(usize, EdgeSet)>,
}

impl Basis {
    fn try_insert(&mut self, mut v: EdgeSet) -> bool {
        for (pivot, row) in &self.rows {
            if v.get(*pivot) {
                v.xor(row);
            }
        }
        match v.lowest() {
            None => false,
            Some(pivot) => {
                for (_, row) in &mut self.rows {
                    if row.get(pivot) {
                        row.xor(&v);
                    }
                }
                self.rows.push((pivot, v));
                true
            }
        }
    }
}

/// Returns `(atoms in cyclic order, bond indices)` per ring, sorted by size
/// then atom sequence.
pub(crate) fn minimum_cycle_basis(
    n_atoms: usize,
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
    fragments: usize,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n_edges = bonds.len();
    let cyclomatic = (n_edges + fragments).saturating_sub(n_atoms);
    if cyclomatic == 0 {
        return Vec::new();
    }

    let mut candidates: Vec<(usize, EdgeSet)> = Vec::new();
    let mut seen: HashSet<EdgeSet> = HashSet::new();
    for root in 0..n_atoms {
        let (dist, parent) = bfs_tree(root, adjacency);
        for (e, bond) in bonds.iter().enumerate() {
            let (x, y) = bond.atoms;
            let (Some(dx), Some(dy)) = (dist[x], dist[y]) else {
                continue;
            };
            if parent[x].map(|p| p.1) == Some(e) || parent[y].map(|p| p.1) == Some(e) {
                continue;
            }
            let px = tree_path(x, &parent);
            let py = tree_path(y, &parent);
            // Paths must share only the root.
            let disjoint = px
                .iter()
                .filter(|&&(a, _)| a != root)
                .all(|&(a, _)| !py.iter().any(|&(b, _)| b == a));
            if !disjoint {
                continue;
            }
            let mut set = EdgeSet::new(n_edges);
            set.set(e);
            for &(_, pe) in px.iter().chain(&py) {
                if let Some(pe) = pe {
                    set.set(pe);
                }
            }
            if seen.insert(set.clone()) {
                candidates.push((dx + dy + 1, set));
            }
        }
    }
    candidates.sort_by_key(|(len, _)| *len);

    let mut basis = Basis { rows: Vec::new() };
    let mut chosen = Vec::new();
    for (_, set) in candidates {
        if chosen.len() == cyclomatic {
            break;
        }
        if basis.try_insert(set.clone()) {
            chosen.push(set);
        }
    }

    let mut rings: Vec<(Vec<usize>, Vec<usize>)> = chosen
        .iter()
        .map(|set| {
            let edges: Vec<usize> = (0..n_edges).filter(|&e| set.get(e)).collect();
            (order_cycle(&edges, bonds), edges)
        })
        .collect();
    rings.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    rings
}

type Parent = Option<(usize, usize)>;

fn bfs_tree(root: usize, adjacency: &[Vec<(usize, usize)>]) -> (Vec<Option<usize>>, Vec<Parent>) {
    let n = adjacency.len();
    let mut dist = vec![None; n];
    let mut parent = vec![None; n];
    dist[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        let d = dist[a].unwrap_or(0);
        for &(m, e) in &adjacency[a] {
            if dist[m].is_none() {
                dist[m] = Some(d + 1);
                parent[m] = Some((a, e));
                queue.push_back(m);
            }
        }
    }
    (dist, parent)
}

/// Nodes from `from` up to the root, each with the edge leading to its parent.
fn tree_path(from: usize, parent: &[Parent]) -> Vec<(usize, Option<usize>)> {
    let mut out = Vec::new();
    let mut cur = from;
    loop {
        match parent[cur] {
            Some((p, e)) => {
                out.push((cur, Some(e)));
                cur = p;
            }
            None => {
                out.push((cur, None));
                return out;
            }
        }
    }
}

/// Walks a simple cycle given as an edge list. Starts at the lowest atom and
/// heads toward its lower-index ring neighbor.
fn order_cycle(edges: &[usize], bonds: &[Bond]) -> Vec<usize> {
    let start = edges
        .iter()
        .flat_map(|&e| [bonds[e].atoms.0, bonds[e].atoms.1])
        .min()
        .expect("non-empty cycle");
    let neighbors_of = |a: usize| -> Vec<(usize, usize)> {
        edges
            .iter()
            .filter(|&&e| bonds[e].atoms.0 == a || bonds[e].atoms.1 == a)
            .map(|&e| (bonds[e].other(a), e))
            .collect()
    };
    let mut first = neighbors_of(start);
    first.sort_unstable();
    let mut ring = vec![start];
    let (mut prev_edge, mut cur) = (first[0].1, first[0].0);
    while cur != start {
        ring.push(cur);
        let next = neighbors_of(cur)
            .into_iter()
            .find(|&(_, e)| e != prev_edge)
            .expect("cycle edges form a closed walk");
        prev_edge = next.1;
        cur = next.0;
    }
    ring
}
