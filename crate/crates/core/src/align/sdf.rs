//! Reading and writing V2000 SD files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AlignError;
use crate::chem::{BondOrder, Element, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfAtom {
    pub element: Element,
    pub position: [f64; 3],
    pub charge: i8,
}

/// Bond between zero-based atom indices; `order` uses the file's codes
/// (1, 2, 3, 4 for aromatic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdfBond {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SdfRecord {
    pub title: String,
    pub atoms: Vec<SdfAtom>,
    pub bonds: Vec<SdfBond>,
    pub data: BTreeMap<String, String>,
}

fn sdf_error(record: usize, line: usize, message: impl Into<String>) -> AlignError {
    AlignError::Sdf { record, line, message: message.into() }
}

fn column(line: &str, from: usize, to: usize) -> &str {
    let end = to.min(line.len());
    if from >= end {
        ""
    } else {
        line.get(from..end).unwrap_or("").trim()
    }
}

fn charge_from_code(code: i32) -> i8 {
    match code {
        1 => 3,
        2 => 2,
        3 => 1,
        5 => -1,
        6 => -2,
        7 => -3,
        _ => 0,
    }
}

fn charge_code(charge: i8) -> i32 {
    match charge {
        3 => 1,
        2 => 2,
        1 => 3,
        -1 => 5,
        -2 => 6,
        -3 => 7,
        _ => 0,
    }
}

/// Parses every record of a multi-record SD file.
pub fn parse_sdf(text: &str) -> Result<Vec<SdfRecord>, AlignError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut records = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i..].iter().all(|l| l.trim().is_empty()) {
            break;
        }
        let index = records.len();
        let (record, next) = parse_record(&lines, i, index)?;
        records.push(record);
        i = next;
    }
    Ok(records)
}

fn parse_record(lines: &[&str], start: usize, index: usize) -> Result<(SdfRecord, usize), AlignError> {
    let line_at = |k: usize| lines.get(k).copied().ok_or_else(|| sdf_error(index, k + 1, "unexpected end of file"));
    let title = line_at(start)?.trim().to_string();
    let counts_no = start + 3;
    let counts = line_at(counts_no)?;
    if counts.contains("V3000") {
        return Err(sdf_error(index, counts_no + 1, "V3000 records are not supported"));
    }
    let parse_count = |s: &str| s.parse::<usize>().map_err(|_| sdf_error(index, counts_no + 1, "bad counts line"));
    let n_atoms = parse_count(column(counts, 0, 3))?;
    let n_bonds = parse_count(column(counts, 3, 6))?;

    let mut atoms = Vec::with_capacity(n_atoms);
    for k in 0..n_atoms {
        let no = counts_no + 1 + k;
        let l = line_at(no)?;
        let coord =
            |from, to| column(l, from, to).parse::<f64>().map_err(|_| sdf_error(index, no + 1, "bad coordinate"));
        let position = [coord(0, 10)?, coord(10, 20)?, coord(20, 30)?];
        let symbol = column(l, 31, 34);
        let element = Element::from_symbol(symbol)
            .ok_or_else(|| sdf_error(index, no + 1, format!("unknown element `{symbol}`")))?;
        let charge = charge_from_code(column(l, 36, 39).parse().unwrap_or(0));
        atoms.push(SdfAtom { element, position, charge });
    }
    let mut bonds = Vec::with_capacity(n_bonds);
    for k in 0..n_bonds {
        let no = counts_no + 1 + n_atoms + k;
        let l = line_at(no)?;
        let field =
            |from, to| column(l, from, to).parse::<usize>().map_err(|_| sdf_error(index, no + 1, "bad bond line"));
        let (a, b, order) = (field(0, 3)?, field(3, 6)?, field(6, 9)?);
        if a == 0 || b == 0 || a > n_atoms || b > n_atoms {
            return Err(sdf_error(index, no + 1, "bond references a missing atom"));
        }
        bonds.push(SdfBond { a: a - 1, b: b - 1, order: order as u8 });
    }

    let mut k = counts_no + 1 + n_atoms + n_bonds;
    let mut charges_from_block = false;
    loop {
        let l = line_at(k)?;
        k += 1;
        if l.starts_with("M  END") {
            break;
        }
        if let Some(rest) = l.strip_prefix("M  CHG") {
            if !charges_from_block {
                atoms.iter_mut().for_each(|a| a.charge = 0);
                charges_from_block = true;
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            for pair in fields.get(1..).unwrap_or(&[]).chunks(2) {
                if let [atom, charge] = pair {
                    let (Ok(atom), Ok(charge)) = (atom.parse::<usize>(), charge.parse::<i8>()) else {
                        return Err(sdf_error(index, k, "bad charge property"));
                    };
                    let slot =
                        atoms.get_mut(atom.wrapping_sub(1)).ok_or_else(|| sdf_error(index, k, "bad charge atom"))?;
                    slot.charge = charge;
                }
            }
        }
    }

    let mut data = BTreeMap::new();
    while k < lines.len() {
        let l = lines[k];
        k += 1;
        if l.starts_with("$$$$") {
            break;
        }
        if let Some(rest) = l.strip_prefix('>') {
            let name = rest.split('<').nth(1).and_then(|s| s.split('>').next()).unwrap_or("").to_string();
            let mut value = Vec::new();
            while k < lines.len() && !lines[k].trim().is_empty() && !lines[k].starts_with("$$$$") {
                value.push(lines[k]);
                k += 1;
            }
            data.insert(name, value.join("\n"));
        }
    }
    Ok((SdfRecord { title, atoms, bonds, data }, k))
}

/// Serializes records as V2000 blocks separated by `$$$$`.
pub fn write_sdf(records: &[SdfRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, "{}", r.title);
        let _ = writeln!(out, "  molscape");
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000", r.atoms.len(), r.bonds.len());
        for a in &r.atoms {
            let _ = writeln!(
                out,
                "{:>10.4}{:>10.4}{:>10.4} {:<3} 0{:>3}  0  0  0  0  0  0  0  0  0  0",
                a.position[0],
                a.position[1],
                a.position[2],
                a.element.symbol(),
                charge_code(a.charge)
            );
        }
        for b in &r.bonds {
            let _ = writeln!(out, "{:>3}{:>3}{:>3}  0", b.a + 1, b.b + 1, b.order);
        }
        let charged: Vec<(usize, i8)> =
            r.atoms.iter().enumerate().filter(|(_, a)| a.charge != 0).map(|(i, a)| (i + 1, a.charge)).collect();
        for chunk in charged.chunks(8) {
            let _ = write!(out, "M  CHG{:>3}", chunk.len());
            for (i, c) in chunk {
                let _ = write!(out, " {i:>3} {c:>3}");
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(out, "M  END");
        for (k, v) in &r.data {
            let _ = writeln!(out, "> <{k}>\n{v}\n");
        }
        let _ = writeln!(out, "$$$$");
    }
    out
}

/// Heavy-atom 3D coordinates of one compound, index-aligned with its graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conformer3D {
    pub id: String,
    pub elements: Vec<Element>,
    pub positions: Vec<[f64; 3]>,
    /// Whether the source record listed explicit hydrogens (dropped here).
    pub had_hydrogens: bool,
}

impl Conformer3D {
    /// Keeps the heavy atoms of `record`, in file order.
    pub fn from_record(id: impl Into<String>, record: &SdfRecord) -> Result<Conformer3D, AlignError> {
        let id = id.into();
        let heavy: Vec<&SdfAtom> = record.atoms.iter().filter(|a| a.element != Element::H).collect();
        if heavy.iter().any(|a| a.position.iter().any(|v| !v.is_finite())) {
            return Err(AlignError::NonFinite);
        }
        Ok(Conformer3D {
            id,
            elements: heavy.iter().map(|a| a.element).collect(),
            positions: heavy.iter().map(|a| a.position).collect(),
            had_hydrogens: heavy.len() != record.atoms.len(),
        })
    }

    /// Checks that atom count and elements agree with `graph`'s heavy atoms.
    pub fn check_against(&self, graph: &MolecularGraph) -> Result<(), AlignError> {
        let heavy: Vec<Element> = graph.atoms().iter().map(|a| a.element).filter(|&e| e != Element::H).collect();
        if heavy.len() != graph.atom_count() {
            return Err(AlignError::Conformer {
                id: self.id.clone(),
                message: "graph carries explicit hydrogen atoms".into(),
            });
        }
        if heavy != self.elements {
            return Err(AlignError::Conformer {
                id: self.id.clone(),
                message: format!("{} conformer atoms do not match {} graph atoms", self.elements.len(), heavy.len()),
            });
        }
        Ok(())
    }

    /// Record with the given positions and the bonds of `graph`.
    pub fn to_record(
        &self,
        graph: &MolecularGraph,
        positions: &[[f64; 3]],
        data: BTreeMap<String, String>,
    ) -> SdfRecord {
        let atoms = graph
            .atoms()
            .iter()
            .zip(positions)
            .map(|(a, &position)| SdfAtom { element: a.element, position, charge: a.charge })
            .collect();
        let bonds = graph
            .bonds()
            .iter()
            .map(|b| SdfBond {
                a: b.a,
                b: b.b,
                order: match b.order {
                    BondOrder::Single => 1,
                    BondOrder::Double => 2,
                    BondOrder::Triple => 3,
                    BondOrder::Aromatic => 4,
                },
            })
            .collect();
        SdfRecord { title: self.id.clone(), atoms, bonds, data }
    }
}
