//! Common-substructure alignment of 3D conformers.

mod kabsch;
mod mcs;
mod occurrence;
mod sdf;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::MolecularGraph;

pub use kabsch::{kabsch, rmsd, RigidTransform};
pub use mcs::{find_mcs, McsResult, DEFAULT_MCS_BUDGET};
pub use occurrence::{
    bond_opacity, invert_opacity, occurrence_opacity, Occurrence, PlacedAtoms, DEFAULT_CLUSTER_RADIUS,
    DEFAULT_OPACITY_FLOOR,
};
pub use sdf::{parse_sdf, write_sdf, Conformer3D, SdfAtom, SdfBond, SdfRecord};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("need at least 2 compounds to align, got {0}")]
    TooFewCompounds(usize),
    #[error("input graph {0} is empty")]
    EmptyGraph(usize),
    #[error("correspondence mismatch: {0}")]
    Correspondence(String),
    #[error("rotation is underdetermined: {0}")]
    Underdetermined(String),
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("SD file record {record}, line {line}: {message}")]
    Sdf { record: usize, line: usize, message: String },
    #[error("conformer `{id}`: {message}")]
    Conformer { id: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    #[serde(with = "millis")]
    pub mcs_budget: Duration,
    pub cluster_radius: f64,
    pub opacity_floor: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            mcs_budget: DEFAULT_MCS_BUDGET,
            cluster_radius: DEFAULT_CLUSTER_RADIUS,
            opacity_floor: DEFAULT_OPACITY_FLOOR,
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedCompound {
    pub id: String,
    pub transform: RigidTransform,
    /// RMSD over the common-substructure atoms after alignment, in Å.
    pub rmsd: f64,
    /// Set when the common substructure could not fix a rotation and only
    /// the centroids were superposed.
    pub translation_only: bool,
    pub positions: Vec<[f64; 3]>,
    /// Atoms matched to the template, in template order.
    pub mcs_atoms: Vec<usize>,
    /// Rings of this compound that the common substructure covers only in part.
    #[serde(default)]
    pub split_rings: Vec<Vec<usize>>,
    pub occurrence: Vec<usize>,
    pub atom_opacity: Vec<f64>,
    pub bond_opacity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub reference: String,
    pub template: MolecularGraph,
    pub exact: bool,
    pub compounds: Vec<AlignedCompound>,
}

fn centroid(points: &[[f64; 3]]) -> [f64; 3] {
    let n = points.len().max(1) as f64;
    std::array::from_fn(|k| points.iter().map(|p| p[k]).sum::<f64>() / n)
}

fn split_rings(graph: &MolecularGraph, mapped: &[usize]) -> Vec<Vec<usize>> {
    graph
        .rings()
        .iter()
        .filter(|ring| {
            let inside = ring.iter().filter(|a| mapped.contains(a)).count();
            inside > 0 && inside < ring.len()
        })
        .cloned()
        .collect()
}

/// Aligns every conformer onto the first over their common substructure
/// and computes occurrence opacities in the shared frame.
pub fn align_compounds(
    graphs: &[&MolecularGraph],
    conformers: &[&Conformer3D],
    config: &AlignConfig,
) -> Result<AlignmentResult, AlignError> {
    if graphs.len() != conformers.len() {
        return Err(AlignError::Correspondence(format!("{} graphs for {} conformers", graphs.len(), conformers.len())));
    }
    for (g, c) in graphs.iter().zip(conformers) {
        c.check_against(g)?;
    }
    let mcs = find_mcs(graphs, config.mcs_budget)?;
    let pick =
        |c: usize, atoms: &[usize]| -> Vec<[f64; 3]> { atoms.iter().map(|&a| conformers[c].positions[a]).collect() };
    let reference_points = pick(0, &mcs.mappings[0]);

    let mut moved = Vec::with_capacity(graphs.len());
    for c in 0..graphs.len() {
        let mapped = &mcs.mappings[c];
        let (transform, error, translation_only) = if c == 0 {
            (RigidTransform::identity(), 0.0, false)
        } else {
            let points = pick(c, mapped);
            match kabsch(&reference_points, &points) {
                Ok((t, e)) => (t, e, false),
                Err(AlignError::Underdetermined(_)) => {
                    // Superpose the matched atoms' centroids, or whole molecules without a match.
                    let (to, from) = if mapped.is_empty() {
                        (centroid(&conformers[0].positions), centroid(&conformers[c].positions))
                    } else {
                        (centroid(&reference_points), centroid(&points))
                    };
                    let t = RigidTransform::translation(std::array::from_fn(|k| to[k] - from[k]));
                    let moved_points: Vec<[f64; 3]> = points.iter().map(|&p| t.apply(p)).collect();
                    let e = if mapped.is_empty() { 0.0 } else { rmsd(&reference_points, &moved_points) };
                    (t, e, true)
                }
                Err(e) => return Err(e),
            }
        };
        let positions: Vec<[f64; 3]> = conformers[c].positions.iter().map(|&p| transform.apply(p)).collect();
        moved.push((transform, error, translation_only, positions));
    }

    let placed: Vec<PlacedAtoms<'_>> =
        conformers.iter().zip(&moved).map(|(c, m)| PlacedAtoms { elements: &c.elements, positions: &m.3 }).collect();
    let occ = occurrence_opacity(&placed, config.cluster_radius, config.opacity_floor);

    let compounds = moved
        .into_iter()
        .enumerate()
        .map(|(c, (transform, rmsd, translation_only, positions))| {
            let atom_opacity = occ.opacity[c].clone();
            let bond_opacity = graphs[c].bonds().iter().map(|b| bond_opacity(&atom_opacity, b.a, b.b)).collect();
            let split_rings = split_rings(graphs[c], &mcs.mappings[c]);
            AlignedCompound {
                id: conformers[c].id.clone(),
                transform,
                rmsd,
                translation_only,
                positions,
                mcs_atoms: mcs.mappings[c].clone(),
                split_rings,
                occurrence: occ.counts[c].clone(),
                atom_opacity,
                bond_opacity,
            }
        })
        .collect();
    Ok(AlignmentResult { reference: conformers[0].id.clone(), template: mcs.template, exact: mcs.exact, compounds })
}
