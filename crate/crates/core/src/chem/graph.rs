use serde::{Deserialize, Serialize};

use super::elements::Element;
use super::rings::smallest_set_of_smallest_rings;
use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence of each endpoint; aromatic bonds count as one
    /// and the aromatic pi electron is handled separately.
    pub(crate) fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Stable small-integer code used in hashed encodings.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    #[serde(default)]
    pub charge: i8,
    #[serde(default)]
    pub aromatic: bool,
    /// Attached hydrogens, implicit or written in a bracket atom.
    #[serde(default)]
    pub hydrogens: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom { element, charge: 0, aromatic: false, hydrogens: 0, isotope: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphParts {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

/// Hydrogen-suppressed molecular graph with perceived rings.
///
/// Constructed only through [`MolecularGraph::new`], which checks the bond
/// invariants and computes the smallest set of smallest rings, so every
/// instance is consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphParts", into = "GraphParts")]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    rings: Vec<Vec<usize>>,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_atom: Vec<bool>,
    ring_bond: Vec<bool>,
}

impl TryFrom<GraphParts> for MolecularGraph {
    type Error = ChemError;

    fn try_from(parts: GraphParts) -> Result<Self, Self::Error> {
        MolecularGraph::new(parts.atoms, parts.bonds)
    }
}

impl From<MolecularGraph> for GraphParts {
    fn from(g: MolecularGraph) -> GraphParts {
        GraphParts { atoms: g.atoms, bonds: g.bonds }
    }
}

impl MolecularGraph {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<MolecularGraph, ChemError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n || bond.a == bond.b {
                return Err(ChemError::InvalidBond { a: bond.a, b: bond.b });
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(ChemError::DuplicateBond { a: bond.a, b: bond.b });
            }
            if bond.order == BondOrder::Aromatic && !(atoms[bond.a].aromatic && atoms[bond.b].aromatic) {
                return Err(ChemError::AromaticBondOnAliphaticAtom { a: bond.a, b: bond.b });
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let edges: Vec<(usize, usize)> = bonds.iter().map(|b| (b.a, b.b)).collect();
        let rings = smallest_set_of_smallest_rings(n, &edges, &adjacency);
        let mut ring_atom = vec![false; n];
        let mut ring_bond = vec![false; bonds.len()];
        for ring in &rings {
            for (k, &a) in ring.iter().enumerate() {
                ring_atom[a] = true;
                let b = ring[(k + 1) % ring.len()];
                if let Some(&(_, e)) = adjacency[a].iter().find(|&&(nb, _)| nb == b) {
                    ring_bond[e] = true;
                }
            }
        }
        Ok(MolecularGraph { atoms, bonds, rings, adjacency, ring_atom, ring_bond })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Smallest set of smallest rings, each as atom indices in cycle order.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor atom, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a].iter().find(|&&(nb, _)| nb == b).map(|&(_, e)| &self.bonds[e])
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.ring_atom[atom]
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn total_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }

    /// Subgraph induced by `keep` (in that order); bonds among kept atoms are retained.
    pub fn induced_subgraph(&self, keep: &[usize]) -> MolecularGraph {
        let mut index = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let atoms = keep.iter().map(|&a| self.atoms[a].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| index[b.a] != usize::MAX && index[b.b] != usize::MAX)
            .map(|b| Bond { a: index[b.a], b: index[b.b], order: b.order })
            .collect();
        MolecularGraph::new(atoms, bonds).expect("induced subgraph of a valid graph is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carbon() -> Atom {
        Atom::new(Element::C)
    }

    #[test]
    fn rejects_self_and_duplicate_bonds() {
        let atoms = vec![carbon(), carbon()];
        let self_bond = vec![Bond { a: 0, b: 0, order: BondOrder::Single }];
        assert!(matches!(MolecularGraph::new(atoms.clone(), self_bond), Err(ChemError::InvalidBond { .. })));
        let dup = vec![Bond { a: 0, b: 1, order: BondOrder::Single }, Bond { a: 1, b: 0, order: BondOrder::Double }];
        assert!(matches!(MolecularGraph::new(atoms, dup), Err(ChemError::DuplicateBond { .. })));
    }

    #[test]
    fn rejects_aromatic_bond_between_aliphatic_atoms() {
        let bonds = vec![Bond { a: 0, b: 1, order: BondOrder::Aromatic }];
        assert!(MolecularGraph::new(vec![carbon(), carbon()], bonds).is_err());
    }

    #[test]
    fn json_round_trip_recomputes_rings() {
        let atoms = vec![carbon(), carbon(), carbon()];
        let bonds = vec![
            Bond { a: 0, b: 1, order: BondOrder::Single },
            Bond { a: 1, b: 2, order: BondOrder::Single },
            Bond { a: 2, b: 0, order: BondOrder::Single },
        ];
        let g = MolecularGraph::new(atoms, bonds).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: MolecularGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.rings().len(), 1);
    }
}
