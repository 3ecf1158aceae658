use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::elements::Element;
use super::graph::{BondOrder, MolecularGraph};
use super::ChemError;

pub const MOLECULAR_WEIGHT: &str = "molecular_weight";
pub const HEAVY_ATOM_COUNT: &str = "heavy_atom_count";
pub const RING_COUNT: &str = "ring_count";
pub const AROMATIC_RING_COUNT: &str = "aromatic_ring_count";
pub const ROTATABLE_BOND_COUNT: &str = "rotatable_bond_count";
pub const H_BOND_DONORS: &str = "h_bond_donors";
pub const H_BOND_ACCEPTORS: &str = "h_bond_acceptors";
pub const FORMAL_CHARGE: &str = "formal_charge";
pub const AROMATIC_FRACTION: &str = "aromatic_fraction";
pub const CARBON_COUNT: &str = "carbon_count";
pub const NITROGEN_COUNT: &str = "nitrogen_count";
pub const OXYGEN_COUNT: &str = "oxygen_count";
pub const SULFUR_COUNT: &str = "sulfur_count";
pub const HALOGEN_COUNT: &str = "halogen_count";
pub const HETEROATOM_COUNT: &str = "heteroatom_count";
pub const HYDROGEN_COUNT: &str = "hydrogen_count";
pub const HEAVY_BOND_COUNT: &str = "heavy_bond_count";
pub const MULTIPLE_BOND_COUNT: &str = "multiple_bond_count";
pub const RING_ATOM_COUNT: &str = "ring_atom_count";
pub const FRACTION_CSP3: &str = "fraction_csp3";

/// Names of the descriptors computed from the graph.
pub const COMPUTED_DESCRIPTORS: [&str; 20] = [
    MOLECULAR_WEIGHT,
    HEAVY_ATOM_COUNT,
    RING_COUNT,
    AROMATIC_RING_COUNT,
    ROTATABLE_BOND_COUNT,
    H_BOND_DONORS,
    H_BOND_ACCEPTORS,
    FORMAL_CHARGE,
    AROMATIC_FRACTION,
    CARBON_COUNT,
    NITROGEN_COUNT,
    OXYGEN_COUNT,
    SULFUR_COUNT,
    HALOGEN_COUNT,
    HETEROATOM_COUNT,
    HYDROGEN_COUNT,
    HEAVY_BOND_COUNT,
    MULTIPLE_BOND_COUNT,
    RING_ATOM_COUNT,
    FRACTION_CSP3,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    Ingested,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorValue {
    pub value: f64,
    pub provenance: Provenance,
}

/// Named descriptor values with per-entry provenance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVector {
    entries: BTreeMap<String, DescriptorValue>,
}

impl DescriptorVector {
    pub fn new() -> DescriptorVector {
        DescriptorVector::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64, provenance: Provenance) {
        self.entries.insert(name.into(), DescriptorValue { value, provenance });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).map(|v| v.value)
    }

    pub fn entry(&self, name: &str) -> Option<&DescriptorValue> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DescriptorValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_donor_or_acceptor_element(e: Element) -> bool {
    e == Element::N || e == Element::O
}

/// Computes the built-in descriptor subset (see [`COMPUTED_DESCRIPTORS`]).
///
/// Rotatable bonds are non-ring single bonds between two atoms that each
/// have at least one other heavy neighbor. Donors are N/O atoms carrying a
/// hydrogen; acceptors are all N/O atoms. An aromatic ring is a ring whose
/// atoms are all aromatic. `fraction_csp3` counts carbons without a
/// double, triple or aromatic bond, over all carbons (0 without carbon).
pub fn compute_descriptors(graph: &MolecularGraph) -> Result<DescriptorVector, ChemError> {
    if graph.is_empty() {
        return Err(ChemError::EmptyGraph);
    }
    let atoms = graph.atoms();
    // Sum per element so the result does not depend on atom order.
    let mut element_counts: BTreeMap<Element, u64> = BTreeMap::new();
    for a in atoms {
        *element_counts.entry(a.element).or_default() += 1;
        *element_counts.entry(Element::H).or_default() += a.hydrogens as u64;
    }
    let molecular_weight: f64 = element_counts.iter().map(|(e, &n)| e.mass() * n as f64).sum();
    let heavy = atoms.iter().filter(|a| a.element != Element::H).count();
    let aromatic_rings = graph.rings().iter().filter(|r| r.iter().all(|&i| atoms[i].aromatic)).count();
    let rotatable = graph
        .bonds()
        .iter()
        .enumerate()
        .filter(|(i, b)| {
            b.order == BondOrder::Single
                && !graph.is_ring_bond(*i)
                && heavy_degree(graph, b.a) >= 2
                && heavy_degree(graph, b.b) >= 2
        })
        .count();
    let donors = atoms.iter().filter(|a| is_donor_or_acceptor_element(a.element) && a.hydrogens > 0).count();
    let acceptors = atoms.iter().filter(|a| is_donor_or_acceptor_element(a.element)).count();
    let aromatic_atoms = atoms.iter().filter(|a| a.aromatic).count();
    let count_of = |e: Element| atoms.iter().filter(|a| a.element == e).count() as f64;
    let halogens = [Element::F, Element::CL, Element::BR, Element::I].into_iter().map(count_of).sum::<f64>();
    let heteroatoms = atoms.iter().filter(|a| a.element != Element::C && a.element != Element::H).count();
    let hydrogens: u64 = element_counts.get(&Element::H).copied().unwrap_or(0);
    let heavy_bonds =
        graph.bonds().iter().filter(|b| atoms[b.a].element != Element::H && atoms[b.b].element != Element::H).count();
    let multiple = graph.bonds().iter().filter(|b| b.order != BondOrder::Single).count();
    let ring_atoms = (0..atoms.len()).filter(|&i| graph.is_ring_atom(i)).count();
    let carbons: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].element == Element::C).collect();
    let sp3 = carbons
        .iter()
        .filter(|&&i| {
            !atoms[i].aromatic && graph.neighbors(i).iter().all(|&(_, b)| graph.bonds()[b].order == BondOrder::Single)
        })
        .count();
    let fsp3 = if carbons.is_empty() { 0.0 } else { sp3 as f64 / carbons.len() as f64 };

    let mut out = DescriptorVector::new();
    let c = Provenance::Computed;
    out.insert(MOLECULAR_WEIGHT, molecular_weight, c);
    out.insert(HEAVY_ATOM_COUNT, heavy as f64, c);
    out.insert(RING_COUNT, graph.rings().len() as f64, c);
    out.insert(AROMATIC_RING_COUNT, aromatic_rings as f64, c);
    out.insert(ROTATABLE_BOND_COUNT, rotatable as f64, c);
    out.insert(H_BOND_DONORS, donors as f64, c);
    out.insert(H_BOND_ACCEPTORS, acceptors as f64, c);
    out.insert(FORMAL_CHARGE, graph.total_charge() as f64, c);
    out.insert(AROMATIC_FRACTION, aromatic_atoms as f64 / atoms.len() as f64, c);
    out.insert(CARBON_COUNT, count_of(Element::C), c);
    out.insert(NITROGEN_COUNT, count_of(Element::N), c);
    out.insert(OXYGEN_COUNT, count_of(Element::O), c);
    out.insert(SULFUR_COUNT, count_of(Element::S), c);
    out.insert(HALOGEN_COUNT, halogens, c);
    out.insert(HETEROATOM_COUNT, heteroatoms as f64, c);
    out.insert(HYDROGEN_COUNT, hydrogens as f64, c);
    out.insert(HEAVY_BOND_COUNT, heavy_bonds as f64, c);
    out.insert(MULTIPLE_BOND_COUNT, multiple as f64, c);
    out.insert(RING_ATOM_COUNT, ring_atoms as f64, c);
    out.insert(FRACTION_CSP3, fsp3, c);
    Ok(out)
}

fn heavy_degree(graph: &MolecularGraph, atom: usize) -> usize {
    graph.neighbors(atom).iter().filter(|&&(nb, _)| graph.atoms()[nb].element != Element::H).count()
}
