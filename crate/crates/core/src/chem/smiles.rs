//! SMILES reader.
//!
//! Supports the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge, atom class), explicit bonds `- = # :`, the directional
//! bonds `/ \` (read as single), branches, ring closures (`1`, `%12`) and
//! dot-disconnected fragments. Stereo marks are consumed and dropped.
//! Aromaticity is taken as written; no perception is done.

use std::collections::BTreeMap;
use std::fmt;

use super::elements::Element;
use super::graph::{Atom, Bond, BondOrder, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    UnexpectedCharacter(char),
    UnknownElement(String),
    UnclosedBranch,
    UnopenedBranch,
    UnmatchedRingClosure(u32),
    ConflictingRingBond(u32),
    InvalidRingClosure(u32),
    MissingAtom,
    DanglingBond,
    UnterminatedBracket,
    UnsupportedBond(char),
    AromaticBondOnAliphaticAtom,
}

/// Parse failure at character offset `offset` (0-based, in chars).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

impl fmt::Display for SmilesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SmilesErrorKind::*;
        write!(f, "SMILES error at offset {}: ", self.offset)?;
        match &self.kind {
            Empty => write!(f, "empty input"),
            UnexpectedCharacter(c) => write!(f, "unexpected character `{c}`"),
            UnknownElement(s) => write!(f, "unknown element `{s}`"),
            UnclosedBranch => write!(f, "unbalanced parentheses: `(` never closed"),
            UnopenedBranch => write!(f, "unbalanced parentheses: `)` without `(`"),
            UnmatchedRingClosure(n) => write!(f, "ring closure {n} never closed"),
            ConflictingRingBond(n) => write!(f, "ring closure {n} has conflicting bond orders"),
            InvalidRingClosure(n) => write!(f, "ring closure {n} would bond an atom to itself or duplicate a bond"),
            MissingAtom => write!(f, "bond, branch or ring closure without a preceding atom"),
            DanglingBond => write!(f, "bond not followed by an atom"),
            UnterminatedBracket => write!(f, "bracket atom without closing `]`"),
            UnsupportedBond(c) => write!(f, "unsupported bond symbol `{c}`"),
            AromaticBondOnAliphaticAtom => write!(f, "aromatic bond between non-aromatic atoms"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondSymbol {
    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct ParsedAtom {
    atom: Atom,
    bracket: bool,
}

struct PendingBond {
    a: usize,
    b: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    atoms: Vec<ParsedAtom>,
    bonds: Vec<PendingBond>,
}

/// Parses a SMILES string into a hydrogen-suppressed [`MolecularGraph`].
///
/// Parsing stops at the first whitespace, so `"CCO ethanol"` is accepted.
pub fn parse_smiles(smiles: &str) -> Result<MolecularGraph, SmilesError> {
    let mut parser = Parser { chars: smiles.chars().collect(), pos: 0, atoms: Vec::new(), bonds: Vec::new() };
    parser.run()?;
    parser.finish()
}

impl Parser {
    fn error(&self, offset: usize, kind: SmilesErrorKind) -> SmilesError {
        SmilesError { offset, kind }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        let mut pending: Option<(BondSymbol, usize)> = None;
        let mut rings: BTreeMap<u32, (usize, Option<BondSymbol>, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                break;
            }
            match c {
                '(' => {
                    if prev.is_none() {
                        return Err(self.error(start, SmilesErrorKind::MissingAtom));
                    }
                    if pending.is_some() {
                        return Err(self.error(start, SmilesErrorKind::DanglingBond));
                    }
                    branches.push((prev, start));
                    self.pos += 1;
                }
                ')' => {
                    if pending.is_some() {
                        return Err(self.error(start, SmilesErrorKind::DanglingBond));
                    }
                    let (restored, _) =
                        branches.pop().ok_or_else(|| self.error(start, SmilesErrorKind::UnopenedBranch))?;
                    prev = restored;
                    self.pos += 1;
                }
                '-' | '=' | '#' | ':' | '/' | '\\' | '$' => {
                    let symbol = match c {
                        '-' | '/' | '\\' => BondSymbol::Single,
                        '=' => BondSymbol::Double,
                        '#' => BondSymbol::Triple,
                        ':' => BondSymbol::Aromatic,
                        _ => return Err(self.error(start, SmilesErrorKind::UnsupportedBond(c))),
                    };
                    if prev.is_none() {
                        return Err(self.error(start, SmilesErrorKind::MissingAtom));
                    }
                    if pending.is_some() {
                        return Err(self.error(start, SmilesErrorKind::UnexpectedCharacter(c)));
                    }
                    pending = Some((symbol, start));
                    self.pos += 1;
                }
                '.' => {
                    if pending.is_some() {
                        return Err(self.error(start, SmilesErrorKind::DanglingBond));
                    }
                    prev = None;
                    self.pos += 1;
                }
                '0'..='9' | '%' => {
                    let number = self.ring_number()?;
                    let atom = prev.ok_or_else(|| self.error(start, SmilesErrorKind::MissingAtom))?;
                    let symbol = pending.take().map(|(s, _)| s);
                    match rings.remove(&number) {
                        Some((open_atom, open_symbol, _)) => {
                            let symbol = match (open_symbol, symbol) {
                                (Some(x), Some(y)) if x != y => {
                                    return Err(self.error(start, SmilesErrorKind::ConflictingRingBond(number)))
                                }
                                (x, y) => x.or(y),
                            };
                            let duplicate = self
                                .bonds
                                .iter()
                                .any(|b| (b.a == open_atom && b.b == atom) || (b.a == atom && b.b == open_atom));
                            if open_atom == atom || duplicate {
                                return Err(self.error(start, SmilesErrorKind::InvalidRingClosure(number)));
                            }
                            self.bonds.push(PendingBond { a: open_atom, b: atom, symbol, offset: start });
                        }
                        None => {
                            rings.insert(number, (atom, symbol, start));
                        }
                    }
                }
                '[' => {
                    let atom = self.bracket_atom()?;
                    prev = Some(self.push_atom(atom, true, prev, pending.take(), start));
                }
                _ => {
                    let atom = self.organic_atom()?;
                    prev = Some(self.push_atom(atom, false, prev, pending.take(), start));
                }
            }
        }

        if let Some((_, offset)) = pending {
            return Err(self.error(offset, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, offset)) = branches.last() {
            return Err(self.error(offset, SmilesErrorKind::UnclosedBranch));
        }
        if let Some((&number, &(_, _, offset))) = rings.iter().next() {
            return Err(self.error(offset, SmilesErrorKind::UnmatchedRingClosure(number)));
        }
        if self.atoms.is_empty() {
            return Err(self.error(0, SmilesErrorKind::Empty));
        }
        Ok(())
    }

    fn push_atom(
        &mut self,
        atom: Atom,
        bracket: bool,
        prev: Option<usize>,
        pending: Option<(BondSymbol, usize)>,
        offset: usize,
    ) -> usize {
        let idx = self.atoms.len();
        self.atoms.push(ParsedAtom { atom, bracket });
        if let Some(p) = prev {
            let (symbol, offset) = match pending {
                Some((s, o)) => (Some(s), o),
                None => (None, offset),
            };
            self.bonds.push(PendingBond { a: p, b: idx, symbol, offset });
        }
        idx
    }

    fn ring_number(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some('%') {
            self.pos += 1;
            let digits: String = self.chars[self.pos..].iter().take(2).collect();
            if digits.len() != 2 || !digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(self.error(start, SmilesErrorKind::UnexpectedCharacter('%')));
            }
            self.pos += 2;
            Ok(digits.parse().expect("two ascii digits"))
        } else {
            let d = self.peek().and_then(|c| c.to_digit(10)).expect("caller checked digit");
            self.pos += 1;
            Ok(d)
        }
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let c = self.peek().expect("caller checked");
        let next = self.chars.get(self.pos + 1).copied();
        let (symbol, aromatic, len) = match (c, next) {
            ('C', Some('l')) => ("Cl", false, 2),
            ('B', Some('r')) => ("Br", false, 2),
            ('B', _) => ("B", false, 1),
            ('C', _) => ("C", false, 1),
            ('N', _) => ("N", false, 1),
            ('O', _) => ("O", false, 1),
            ('P', _) => ("P", false, 1),
            ('S', _) => ("S", false, 1),
            ('F', _) => ("F", false, 1),
            ('I', _) => ("I", false, 1),
            ('b', _) => ("B", true, 1),
            ('c', _) => ("C", true, 1),
            ('n', _) => ("N", true, 1),
            ('o', _) => ("O", true, 1),
            ('p', _) => ("P", true, 1),
            ('s', _) => ("S", true, 1),
            _ if c.is_ascii_alphabetic() || c == '*' => {
                let mut text = c.to_string();
                if let Some(n) = next.filter(|n| n.is_ascii_lowercase()) {
                    text.push(n);
                }
                return Err(self.error(start, SmilesErrorKind::UnknownElement(text)));
            }
            _ => return Err(self.error(start, SmilesErrorKind::UnexpectedCharacter(c))),
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(symbol).expect("organic subset symbol"));
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect::<String>().parse().unwrap_or(u32::MAX))
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = self.digits().map(|v| v.min(u16::MAX as u32) as u16);

        let sym_start = self.pos;
        let first = self.peek().ok_or_else(|| self.error(open, SmilesErrorKind::UnterminatedBracket))?;
        let second = self.chars.get(self.pos + 1).copied();
        let (element, aromatic) = if first.is_ascii_lowercase() {
            let two: Option<String> = second.map(|s| [first, s].iter().collect());
            match two.as_deref() {
                Some("se") | Some("as") | Some("te") => {
                    self.pos += 2;
                    let cap = capitalize(two.as_deref().unwrap());
                    (Element::from_symbol(&cap), true)
                }
                _ if matches!(first, 'b' | 'c' | 'n' | 'o' | 'p' | 's') => {
                    self.pos += 1;
                    (Element::from_symbol(&first.to_ascii_uppercase().to_string()), true)
                }
                _ => (None, false),
            }
        } else if first.is_ascii_uppercase() {
            let two = second
                .filter(|s| s.is_ascii_lowercase())
                .and_then(|s| Element::from_symbol(&[first, s].iter().collect::<String>()));
            match two {
                Some(e) => {
                    self.pos += 2;
                    (Some(e), false)
                }
                None => {
                    self.pos += 1;
                    (Element::from_symbol(&first.to_string()), false)
                }
            }
        } else {
            (None, false)
        };
        let element = match element {
            Some(e) => e,
            None => {
                let text: String = self.chars[sym_start..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphabetic() || **c == '*')
                    .take(2)
                    .collect();
                return Err(self.error(sym_start, SmilesErrorKind::UnknownElement(text)));
            }
        };

        // Chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH30.
        let mut chiral = false;
        while self.peek() == Some('@') {
            self.pos += 1;
            chiral = true;
        }
        let rest: String = self.chars[self.pos..].iter().take(2).collect();
        if chiral && matches!(rest.as_str(), "TH" | "AL" | "SP" | "TB" | "OH") {
            self.pos += 2;
            self.digits();
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some('H') {
            self.pos += 1;
            hydrogens = self.digits().map_or(1, |v| v.min(u8::MAX as u32) as u8);
        }

        let mut charge: i32 = 0;
        if let Some(sign @ ('+' | '-')) = self.peek() {
            let unit = if sign == '+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(mag) = self.digits() {
                charge = unit * mag.min(15) as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }

        if self.peek() == Some(':') {
            self.pos += 1;
            self.digits();
        }

        match self.peek() {
            Some(']') => self.pos += 1,
            Some(c) => return Err(self.error(self.pos, SmilesErrorKind::UnexpectedCharacter(c))),
            None => return Err(self.error(open, SmilesErrorKind::UnterminatedBracket)),
        }

        Ok(Atom { element, charge: charge.clamp(i8::MIN as i32, i8::MAX as i32) as i8, aromatic, hydrogens, isotope })
    }

    fn finish(self) -> Result<MolecularGraph, SmilesError> {
        let Parser { atoms: parsed, bonds: pending, .. } = self;
        let mut bonds = Vec::with_capacity(pending.len());
        for b in &pending {
            let both_aromatic = parsed[b.a].atom.aromatic && parsed[b.b].atom.aromatic;
            let order = match b.symbol {
                Some(BondSymbol::Aromatic) if !both_aromatic => {
                    return Err(SmilesError { offset: b.offset, kind: SmilesErrorKind::AromaticBondOnAliphaticAtom })
                }
                Some(s) => s.order(),
                None if both_aromatic => BondOrder::Aromatic,
                None => BondOrder::Single,
            };
            bonds.push(Bond { a: b.a, b: b.b, order });
        }

        let mut atoms: Vec<Atom> = parsed.iter().map(|p| p.atom.clone()).collect();
        for (i, p) in parsed.iter().enumerate() {
            if !p.bracket {
                let used: u8 = bonds.iter().filter(|b| b.a == i || b.b == i).map(|b| b.order.valence()).sum();
                atoms[i].hydrogens = implicit_hydrogens(&atoms[i], used);
            }
        }

        let (atoms, bonds) = fold_bracket_hydrogens(atoms, bonds);

        // Self-bonds, duplicates and aromatic mismatches were rejected above.
        let graph = MolecularGraph::new(atoms, bonds).expect("parser output is a valid graph");
        // Implicit aromatic bonds only make sense inside rings ("c1ccccc1c1ccccc1").
        if graph.bonds().iter().enumerate().any(|(i, b)| b.order == BondOrder::Aromatic && !graph.is_ring_bond(i)) {
            let bonds = graph
                .bonds()
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let mut b = *b;
                    if b.order == BondOrder::Aromatic && !graph.is_ring_bond(i) {
                        b.order = BondOrder::Single;
                    }
                    b
                })
                .collect();
            return Ok(MolecularGraph::new(graph.atoms().to_vec(), bonds).expect("valid after downgrade"));
        }
        Ok(graph)
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

fn implicit_hydrogens(atom: &Atom, used_valence: u8) -> u8 {
    if atom.aromatic {
        // Only aromatic carbon carries implicit hydrogens; heteroatoms that need
        // one are written as bracket atoms ([nH]).
        return if atom.element == Element::C { 3u8.saturating_sub(used_valence) } else { 0 };
    }
    atom.element.default_valences().iter().find(|&&v| v >= used_valence).map_or(0, |&v| v - used_valence)
}

/// Removes plain `[H]` atoms bonded to exactly one heavy atom and adds them to
/// that atom's hydrogen count, so `[H]C([H])([H])[H]` and `C` give the same graph.
fn fold_bracket_hydrogens(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> (Vec<Atom>, Vec<Bond>) {
    let n = atoms.len();
    let mut degree = vec![0usize; n];
    for b in &bonds {
        degree[b.a] += 1;
        degree[b.b] += 1;
    }
    let is_plain_h = |i: usize| {
        let a = &atoms[i];
        a.element == Element::H && a.charge == 0 && a.isotope.is_none() && a.hydrogens == 0
    };
    let mut remove = vec![false; n];
    for b in &bonds {
        for (h, heavy) in [(b.a, b.b), (b.b, b.a)] {
            if is_plain_h(h) && degree[h] == 1 && atoms[heavy].element != Element::H && b.order == BondOrder::Single {
                remove[h] = true;
            }
        }
    }
    if !remove.contains(&true) {
        return (atoms, bonds);
    }
    for b in &bonds {
        if remove[b.a] {
            atoms[b.b].hydrogens = atoms[b.b].hydrogens.saturating_add(1);
        } else if remove[b.b] {
            atoms[b.a].hydrogens = atoms[b.a].hydrogens.saturating_add(1);
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut kept = Vec::new();
    for (i, atom) in atoms.into_iter().enumerate() {
        if !remove[i] {
            index[i] = kept.len();
            kept.push(atom);
        }
    }
    let bonds = bonds
        .into_iter()
        .filter(|b| !remove[b.a] && !remove[b.b])
        .map(|b| Bond { a: index[b.a], b: index[b.b], order: b.order })
        .collect();
    (kept, bonds)
}
