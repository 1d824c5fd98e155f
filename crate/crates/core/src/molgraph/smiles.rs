//! Tokenizer/parser for the supported SMILES subset. Produces an unperceived
//! graph; hydrogen counts and Kekulé orders are resolved in `perceive`.

use std::collections::BTreeMap;

use super::{BondOrder, Element, SmilesError};

#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// `Some` for bracket atoms: the written hydrogen count.
    pub bracket_h: Option<u8>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawBond {
    pub a: usize,
    pub b: usize,
    /// `None` when no bond symbol was written.
    pub order: Option<BondOrder>,
    pub position: usize,
}

#[derive(Debug, Default)]
pub(crate) struct RawGraph {
    pub atoms: Vec<RawAtom>,
    pub bonds: Vec<RawBond>,
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    graph: RawGraph,
}

fn syntax(position: usize, message: impl Into<String>) -> SmilesError {
    SmilesError::Syntax {
        position,
        message: message.into(),
    }
}

pub(crate) fn parse(text: &str) -> Result<RawGraph, SmilesError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(syntax(0, "empty SMILES string"));
    }
    if !text.is_ascii() {
        return Err(syntax(0, "non-ASCII character"));
    }
    Parser {
        input: text.as_bytes(),
        pos: 0,
        graph: RawGraph::default(),
    }
    .run()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn run(mut self) -> Result<RawGraph, SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut pending: Option<(BondOrder, usize)> = None;
        let mut open_rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)> = BTreeMap::new();
        // Last token was '(' with nothing inside yet.
        let mut empty_branch = false;

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return Err(syntax(start, "branch without a preceding atom"));
                    };
                    if pending.is_some() || empty_branch {
                        return Err(syntax(start, "unexpected '('"));
                    }
                    branches.push((p, start));
                    empty_branch = true;
                    self.pos += 1;
                }
                b')' => {
                    if empty_branch {
                        return Err(syntax(start, "empty branch"));
                    }
                    if pending.is_some() {
                        return Err(syntax(start, "bond symbol before ')'"));
                    }
                    let Some((p, _)) = branches.pop() else {
                        return Err(syntax(start, "unbalanced ')'"));
                    };
                    prev = Some(p);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() {
                        return Err(syntax(start, "consecutive bond symbols"));
                    }
                    if prev.is_none() {
                        return Err(syntax(start, "bond symbol without a preceding atom"));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    pending = Some((order, start));
                    self.pos += 1;
                }
                b'.' => {
                    if prev.is_none() || pending.is_some() || empty_branch {
                        return Err(syntax(start, "misplaced '.'"));
                    }
                    if !branches.is_empty() {
                        return Err(syntax(start, "'.' inside a branch"));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return Err(syntax(start, "ring closure without a preceding atom"));
                    };
                    if empty_branch {
                        return Err(syntax(start, "ring closure directly after '('"));
                    }
                    let label = self.ring_label()?;
                    let written = pending.take().map(|(o, _)| o);
                    match open_rings.remove(&label) {
                        Some((other, opening, _)) => {
                            if other == p {
                                return Err(syntax(start, "ring closure onto the same atom"));
                            }
                            let order = match (opening, written) {
                                (Some(x), Some(y)) if x != y => {
                                    return Err(syntax(start, "conflicting ring-closure bond orders"))
                                }
                                (x, y) => x.or(y),
                            };
                            self.graph.bonds.push(RawBond {
                                a: other,
                                b: p,
                                order,
                                position: start,
                            });
                        }
                        None => {
                            open_rings.insert(label, (p, written, start));
                        }
                    }
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    prev = Some(self.add_atom(atom, prev, pending.take(), start)?);
                    empty_branch = false;
                }
                b'*' => {
                    return Err(SmilesError::UnsupportedElement {
                        symbol: "*".into(),
                        position: start,
                    })
                }
                c if c.is_ascii_alphabetic() => {
                    let atom = self.organic_atom()?;
                    prev = Some(self.add_atom(atom, prev, pending.take(), start)?);
                    empty_branch = false;
                }
                _ => return Err(syntax(start, format!("unexpected character '{}'", c as char))),
            }
        }

        if let Some((_, pos)) = pending {
            return Err(syntax(pos, "dangling bond symbol"));
        }
        if let Some(&(_, pos)) = branches.last() {
            return Err(syntax(pos, "unclosed branch"));
        }
        if let Some((_, &(_, _, pos))) = open_rings.iter().next() {
            return Err(syntax(pos, "unclosed ring"));
        }
        if self.graph.atoms.is_empty() {
            return Err(syntax(0, "no atoms"));
        }
        Ok(self.graph)
    }

    fn add_atom(
        &mut self,
        atom: RawAtom,
        prev: Option<usize>,
        pending: Option<(BondOrder, usize)>,
        position: usize,
    ) -> Result<usize, SmilesError> {
        let idx = self.graph.atoms.len();
        self.graph.atoms.push(atom);
        match (prev, pending) {
            (Some(p), bond) => self.graph.bonds.push(RawBond {
                a: p,
                b: idx,
                order: bond.map(|(o, _)| o),
                position,
            }),
            (None, Some((_, pos))) => return Err(syntax(pos, "bond symbol without a preceding atom")),
            (None, None) => {}
        }
        Ok(idx)
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.input.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0'))
                }
                _ => Err(syntax(start, "'%' must be followed by two digits")),
            }
        } else {
            let d = self.input[self.pos] - b'0';
            self.pos += 1;
            Ok(u32::from(d))
        }
    }

    fn organic_atom(&mut self) -> Result<RawAtom, SmilesError> {
        let start = self.pos;
        let rest = &self.input[self.pos..];
        let (symbol, len) = if rest.starts_with(b"Cl") {
            ("Cl", 2)
        } else if rest.starts_with(b"Br") {
            ("Br", 2)
        } else {
            (std::str::from_utf8(&rest[..1]).unwrap_or("?"), 1)
        };
        self.pos += len;
        let (element, aromatic) = match symbol {
            "C" => (Element::C, false),
            "N" => (Element::N, false),
            "O" => (Element::O, false),
            "F" => (Element::F, false),
            "Cl" => (Element::Cl, false),
            "c" => (Element::C, true),
            "n" => (Element::N, true),
            "o" => (Element::O, true),
            other => {
                return Err(SmilesError::UnsupportedElement {
                    symbol: other.to_string(),
                    position: start,
                })
            }
        };
        Ok(RawAtom {
            element,
            charge: 0,
            aromatic,
            bracket_h: None,
        })
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            return Err(syntax(self.pos, "isotopes are not supported"));
        }

        let sym_start = self.pos;
        let (symbol, aromatic) = match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                let two = matches!(self.input.get(self.pos + 1), Some(n) if n.is_ascii_lowercase());
                let len = if two { 2 } else { 1 };
                let s = &self.input[self.pos..self.pos + len];
                self.pos += len;
                (std::str::from_utf8(s).unwrap_or("?").to_string(), false)
            }
            Some(c) if c.is_ascii_lowercase() => {
                let rest = &self.input[self.pos..];
                let len = if rest.starts_with(b"se") || rest.starts_with(b"as") {
                    2
                } else {
                    1
                };
                let s = std::str::from_utf8(&rest[..len]).unwrap_or("?").to_string();
                self.pos += len;
                (s, true)
            }
            _ => return Err(syntax(sym_start, "bad bracket atom: expected an element symbol")),
        };
        let element = match (symbol.as_str(), aromatic) {
            ("c", true) => Element::C,
            ("n", true) => Element::N,
            ("o", true) => Element::O,
            (s, false) => Element::from_symbol(s).ok_or_else(|| SmilesError::UnsupportedElement {
                symbol: s.to_string(),
                position: sym_start,
            })?,
            (s, true) => {
                return Err(SmilesError::UnsupportedElement {
                    symbol: s.to_string(),
                    position: sym_start,
                })
            }
        };

        // Chirality is accepted and discarded.
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = match self.digits() {
                Some(n) => u8::try_from(n).map_err(|_| syntax(self.pos, "hydrogen count too large"))?,
                None => 1,
            };
            if element == Element::H {
                return Err(syntax(sym_start, "bad bracket atom: hydrogen count on hydrogen"));
            }
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.digits() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                }
            }
        }
        let charge = i8::try_from(charge)
            .ok()
            .filter(|c| c.abs() <= 4)
            .ok_or_else(|| syntax(sym_start, "bad bracket atom: charge out of range"))?;

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(b':') => return Err(syntax(self.pos, "atom classes are not supported")),
            _ => return Err(syntax(open, "bad bracket atom: missing ']'")),
        }

        Ok(RawAtom {
            element,
            charge,
            aromatic,
            bracket_h: Some(hydrogens),
        })
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.input[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}
