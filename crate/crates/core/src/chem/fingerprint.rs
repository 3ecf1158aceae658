//! Hashed bit fingerprints: circular (ECFP-style) and linear path.
//!
//! Identifiers are 64-bit FNV-1a hashes of small canonical byte encodings,
//! folded into the bit vector by `identifier % n_bits`.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::graph::MolecularGraph;
use super::ChemError;

pub const DEFAULT_FINGERPRINT_BITS: usize = 1024;
pub const DEFAULT_ECFP_RADIUS: usize = 2;
pub const DEFAULT_MAX_PATH_LENGTH: usize = 7;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingerprintKind {
    Ecfp,
    Path,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitFingerprint {
    pub kind: FingerprintKind,
    len: usize,
    words: Vec<u64>,
}

impl BitFingerprint {
    pub fn zeros(kind: FingerprintKind, len: usize) -> BitFingerprint {
        BitFingerprint { kind, len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.len, "bit {bit} out of range for {}-bit fingerprint", self.len);
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.len && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// `|A ∩ B| / |A ∪ B|`; two empty fingerprints are defined as identical (1.0).
    pub fn tanimoto(&self, other: &BitFingerprint) -> f64 {
        let (mut inter, mut union) = (0u32, 0u32);
        for (a, b) in self.words.iter().zip(&other.words) {
            inter += (a & b).count_ones();
            union += (a | b).count_ones();
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Dense 0/1 feature vector.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.len).map(|i| if self.get(i) { 1.0 } else { 0.0 }).collect()
    }
}

fn fold(kind: FingerprintKind, ids: impl IntoIterator<Item = u64>, n_bits: usize) -> BitFingerprint {
    let mut fp = BitFingerprint::zeros(kind, n_bits);
    for id in ids {
        fp.set((id % n_bits as u64) as usize);
    }
    fp
}

/// Circular environment identifiers that survive duplicate removal, before folding.
///
/// Iteration 0 hashes `(element, heavy degree, charge, attached H, in ring)`.
/// Each later iteration hashes `(iteration, previous id, sorted (bond order,
/// neighbor id) list)`. An environment is dropped when its atom set was
/// already produced earlier (by any atom); within one iteration the smallest
/// identifier per atom set is kept.
pub fn ecfp_identifiers(graph: &MolecularGraph, radius: usize) -> Result<BTreeSet<u64>, ChemError> {
    if graph.is_empty() {
        return Err(ChemError::EmptyGraph);
    }
    let n = graph.atom_count();
    let words = n.div_ceil(64);
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let atom = &graph.atoms()[i];
            let bytes = [
                atom.element.atomic_number(),
                graph.degree(i).min(255) as u8,
                atom.charge as u8,
                atom.hydrogens,
                graph.is_ring_atom(i) as u8,
            ];
            fnv1a64(&bytes)
        })
        .collect();
    let mut envs: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut set = vec![0u64; words];
            set[i / 64] |= 1 << (i % 64);
            set
        })
        .collect();

    let mut seen_sets: HashSet<Vec<u64>> = envs.iter().cloned().collect();
    let mut out: BTreeSet<u64> = ids.iter().copied().collect();

    for iteration in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_envs = Vec::with_capacity(n);
        for i in 0..n {
            let mut nbrs: Vec<(u8, u64)> =
                graph.neighbors(i).iter().map(|&(nb, e)| (graph.bonds()[e].order.code(), ids[nb])).collect();
            nbrs.sort_unstable();
            let mut bytes = Vec::with_capacity(12 + nbrs.len() * 9);
            bytes.extend_from_slice(&(iteration as u32).to_le_bytes());
            bytes.extend_from_slice(&ids[i].to_le_bytes());
            for (order, id) in &nbrs {
                bytes.push(*order);
                bytes.extend_from_slice(&id.to_le_bytes());
            }
            next_ids.push(fnv1a64(&bytes));

            let mut env = envs[i].clone();
            for &(nb, _) in graph.neighbors(i) {
                for (w, o) in env.iter_mut().zip(&envs[nb]) {
                    *w |= o;
                }
            }
            next_envs.push(env);
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| next_ids[i]);
        let mut fresh: HashSet<Vec<u64>> = HashSet::new();
        for i in order {
            let env = &next_envs[i];
            if seen_sets.contains(env) || !fresh.insert(env.clone()) {
                continue;
            }
            out.insert(next_ids[i]);
        }
        seen_sets.extend(fresh);
        ids = next_ids;
        envs = next_envs;
    }
    Ok(out)
}

/// Circular fingerprint with environments up to `radius` bonds.
pub fn compute_ecfp(graph: &MolecularGraph, radius: usize, n_bits: usize) -> Result<BitFingerprint, ChemError> {
    if n_bits == 0 {
        return Err(ChemError::InvalidParameter("n_bits must be at least 1".into()));
    }
    let ids = ecfp_identifiers(graph, radius)?;
    Ok(fold(FingerprintKind::Ecfp, ids, n_bits))
}

/// Canonical encodings of every simple path with `1..=max_len` bonds.
///
/// A path reads `element, bond, element, ...`; of the two directions the
/// lexicographically smaller byte string is kept. Atoms without bonds
/// contribute a zero-length path so every non-empty graph sets a bit.
pub fn path_encodings(graph: &MolecularGraph, max_len: usize) -> Result<BTreeSet<Vec<u8>>, ChemError> {
    if graph.is_empty() {
        return Err(ChemError::EmptyGraph);
    }
    if max_len == 0 {
        return Err(ChemError::InvalidParameter("max_path_len must be at least 1".into()));
    }
    let mut out = BTreeSet::new();
    let mut on_path = vec![false; graph.atom_count()];
    for start in 0..graph.atom_count() {
        if graph.degree(start) == 0 {
            out.insert(vec![graph.atoms()[start].element.atomic_number()]);
            continue;
        }
        let mut code = vec![graph.atoms()[start].element.atomic_number()];
        on_path[start] = true;
        extend_paths(graph, start, max_len, &mut on_path, &mut code, &mut out);
        on_path[start] = false;
    }
    Ok(out)
}

fn extend_paths(
    graph: &MolecularGraph,
    atom: usize,
    remaining: usize,
    on_path: &mut [bool],
    code: &mut Vec<u8>,
    out: &mut BTreeSet<Vec<u8>>,
) {
    if remaining == 0 {
        return;
    }
    for &(nb, e) in graph.neighbors(atom) {
        if on_path[nb] {
            continue;
        }
        code.push(graph.bonds()[e].order.code());
        code.push(graph.atoms()[nb].element.atomic_number());
        let reversed: Vec<u8> = code.iter().rev().copied().collect();
        out.insert(if reversed < *code { reversed } else { code.clone() });
        on_path[nb] = true;
        extend_paths(graph, nb, remaining - 1, on_path, code, out);
        on_path[nb] = false;
        code.truncate(code.len() - 2);
    }
}

/// Linear path fingerprint over simple paths of up to `max_path_len` bonds.
pub fn compute_path_fingerprint(
    graph: &MolecularGraph,
    max_path_len: usize,
    n_bits: usize,
) -> Result<BitFingerprint, ChemError> {
    if n_bits == 0 {
        return Err(ChemError::InvalidParameter("n_bits must be at least 1".into()));
    }
    let paths = path_encodings(graph, max_path_len)?;
    Ok(fold(FingerprintKind::Path, paths.iter().map(|p| fnv1a64(p)), n_bits))
}
