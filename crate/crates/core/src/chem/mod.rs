//! Molecular graphs from SMILES, hashed fingerprints, and the computed
//! descriptor and drug-likeness subset.

mod descriptors;
mod druglikeness;
mod elements;
mod fingerprint;
mod graph;
mod rings;
mod smiles;

pub use descriptors::{
    compute_descriptors, DescriptorValue, DescriptorVector, Provenance, AROMATIC_FRACTION, AROMATIC_RING_COUNT,
    CARBON_COUNT, COMPUTED_DESCRIPTORS, FORMAL_CHARGE, FRACTION_CSP3, HALOGEN_COUNT, HEAVY_ATOM_COUNT,
    HEAVY_BOND_COUNT, HETEROATOM_COUNT, HYDROGEN_COUNT, H_BOND_ACCEPTORS, H_BOND_DONORS, MOLECULAR_WEIGHT,
    MULTIPLE_BOND_COUNT, NITROGEN_COUNT, OXYGEN_COUNT, RING_ATOM_COUNT, RING_COUNT, ROTATABLE_BOND_COUNT, SULFUR_COUNT,
};
pub use druglikeness::{compute_ro5, DrugLikenessRecord, Ro5Count};
pub use elements::Element;
pub use fingerprint::{
    compute_ecfp, compute_path_fingerprint, ecfp_identifiers, fnv1a64, path_encodings, BitFingerprint, FingerprintKind,
    DEFAULT_ECFP_RADIUS, DEFAULT_FINGERPRINT_BITS, DEFAULT_MAX_PATH_LENGTH,
};
pub use graph::{Atom, Bond, BondOrder, MolecularGraph};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum ChemError {
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    #[error("unknown element symbol `{0}`")]
    UnknownElement(String),
    #[error("bond {a}-{b} does not join two distinct atoms of the graph")]
    InvalidBond { a: usize, b: usize },
    #[error("duplicate bond between atoms {a} and {b}")]
    DuplicateBond { a: usize, b: usize },
    #[error("aromatic bond {a}-{b} joins a non-aromatic atom")]
    AromaticBondOnAliphaticAtom { a: usize, b: usize },
    #[error("molecular graph has no atoms")]
    EmptyGraph,
    #[error("{0}")]
    InvalidParameter(String),
}
