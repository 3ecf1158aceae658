//! Maximum common connected induced substructure by clique search in the
//! modular product graph.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::AlignError;
use crate::chem::{Element, MolecularGraph};

pub const DEFAULT_MCS_BUDGET: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsResult {
    /// The common substructure, in the atom order of the first folded graph.
    pub template: MolecularGraph,
    /// Per input graph: template atom index to graph atom index.
    pub mappings: Vec<Vec<usize>>,
    /// False when a search step ran out of time and returned its best so far.
    pub exact: bool,
}

impl McsResult {
    pub fn is_empty(&self) -> bool {
        self.template.is_empty()
    }
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
        })
    }
}

/// Indices of non-hydrogen atoms.
fn heavy_atoms(g: &MolecularGraph) -> Vec<usize> {
    (0..g.atom_count()).filter(|&i| g.atoms()[i].element != Element::H).collect()
}

fn adjacency(g: &MolecularGraph, atoms: &[usize]) -> Vec<Vec<bool>> {
    atoms.iter().map(|&a| atoms.iter().map(|&b| a != b && g.bond_between(a, b).is_some()).collect()).collect()
}

struct Product {
    pairs: Vec<(usize, usize)>,
    /// Compatible: both adjacent or both non-adjacent.
    compatible: Vec<Bits>,
    /// Both adjacent; used for the connectivity constraint.
    connected: Vec<Bits>,
    elements: Vec<Element>,
    sizes: (usize, usize),
}

fn modular_product(g1: &MolecularGraph, h1: &[usize], g2: &MolecularGraph, h2: &[usize]) -> Product {
    let (a1, a2) = (adjacency(g1, h1), adjacency(g2, h2));
    let mut pairs = Vec::new();
    let mut elements = Vec::new();
    for (i, &x) in h1.iter().enumerate() {
        for (j, &y) in h2.iter().enumerate() {
            if g1.atoms()[x].element == g2.atoms()[y].element {
                pairs.push((i, j));
                elements.push(g1.atoms()[x].element);
            }
        }
    }
    let n = pairs.len();
    let mut compatible = vec![Bits::new(n); n];
    let mut connected = vec![Bits::new(n); n];
    for u in 0..n {
        let (i, j) = pairs[u];
        for v in u + 1..n {
            let (k, l) = pairs[v];
            if i == k || j == l || a1[i][k] != a2[j][l] {
                continue;
            }
            compatible[u].set(v);
            compatible[v].set(u);
            if a1[i][k] {
                connected[u].set(v);
                connected[v].set(u);
            }
        }
    }
    Product { pairs, compatible, connected, elements, sizes: (h1.len(), h2.len()) }
}

struct Search<'a> {
    p: &'a Product,
    deadline: Instant,
    timed_out: bool,
    nodes: u64,
    best: Vec<usize>,
    clique: Vec<usize>,
}

impl Search<'_> {
    /// Upper bound on how many of `candidates` can join the clique: per
    /// element, the smaller of the distinct atoms on either side.
    fn bound(&self, candidates: &Bits) -> usize {
        let mut left = vec![false; self.p.sizes.0];
        let mut right = vec![false; self.p.sizes.1];
        let mut per_element: Vec<(Element, usize, usize)> = Vec::new();
        for v in candidates.iter() {
            let (i, j) = self.p.pairs[v];
            let e = self.p.elements[v];
            let slot = match per_element.iter().position(|x| x.0 == e) {
                Some(k) => k,
                None => {
                    per_element.push((e, 0, 0));
                    per_element.len() - 1
                }
            };
            if !left[i] {
                left[i] = true;
                per_element[slot].1 += 1;
            }
            if !right[j] {
                right[j] = true;
                per_element[slot].2 += 1;
            }
        }
        per_element.iter().map(|x| x.1.min(x.2)).sum()
    }

    fn expand(&mut self, mut candidates: Bits, frontier: Bits) {
        self.nodes += 1;
        if self.nodes % 1024 == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }
        if self.clique.len() > self.best.len() {
            self.best = self.clique.clone();
        }
        if self.clique.len() + self.bound(&candidates) <= self.best.len() {
            return;
        }
        let extendable: Vec<usize> = candidates.and(&frontier).iter().collect();
        for v in extendable {
            if self.clique.len() + self.bound(&candidates) <= self.best.len() || self.timed_out {
                return;
            }
            let next = candidates.and(&self.p.compatible[v]);
            let mut next_frontier = frontier.and(&self.p.compatible[v]);
            for (w, word) in next_frontier.0.iter_mut().enumerate() {
                *word |= self.p.connected[v].0[w] & next.0[w];
            }
            self.clique.push(v);
            self.expand(next, next_frontier);
            self.clique.pop();
            candidates.clear(v);
        }
    }
}

/// Pairwise search; returns matched heavy-atom index pairs and exactness.
fn pairwise(g1: &MolecularGraph, g2: &MolecularGraph, deadline: Instant) -> (Vec<(usize, usize)>, bool) {
    let (h1, h2) = (heavy_atoms(g1), heavy_atoms(g2));
    let product = modular_product(g1, &h1, g2, &h2);
    let n = product.pairs.len();
    if n == 0 {
        return (Vec::new(), true);
    }
    let mut search = Search { p: &product, deadline, timed_out: false, nodes: 0, best: Vec::new(), clique: Vec::new() };
    let mut all = Bits::new(n);
    (0..n).for_each(|v| all.set(v));
    // Seed each root separately so the frontier starts from that vertex alone.
    let mut remaining = all;
    for v in 0..n {
        if search.timed_out || search.bound(&remaining) <= search.best.len() {
            break;
        }
        let candidates = remaining.and(&product.compatible[v]);
        let frontier = candidates.and(&product.connected[v]);
        search.clique.push(v);
        search.expand(candidates, frontier);
        search.clique.pop();
        remaining.clear(v);
        if remaining.is_empty() {
            break;
        }
    }
    let matched = search.best.iter().map(|&v| (h1[product.pairs[v].0], h2[product.pairs[v].1])).collect();
    (matched, !search.timed_out)
}

/// Maximum common connected substructure of all `graphs`, folded pairwise
/// starting from the smallest graph. Atoms match by element; bonds match by
/// presence regardless of order; hydrogens are ignored.
pub fn find_mcs(graphs: &[&MolecularGraph], budget_per_step: Duration) -> Result<McsResult, AlignError> {
    if graphs.len() < 2 {
        return Err(AlignError::TooFewCompounds(graphs.len()));
    }
    if let Some(i) = graphs.iter().position(|g| g.is_empty()) {
        return Err(AlignError::EmptyGraph(i));
    }
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    order.sort_by_key(|&i| heavy_atoms(graphs[i]).len());

    let first = order[0];
    let mut template_atoms: Vec<usize> = heavy_atoms(graphs[first]);
    let mut template = graphs[first].induced_subgraph(&template_atoms);
    // mappings[i][t]: atom of graph i matched to template atom t.
    let mut mappings: Vec<Option<Vec<usize>>> = vec![None; graphs.len()];
    mappings[first] = Some(template_atoms.clone());
    let mut exact = true;

    for &gi in &order[1..] {
        let deadline = Instant::now() + budget_per_step;
        let (matched, step_exact) = pairwise(&template, graphs[gi], deadline);
        exact &= step_exact;
        let mut matched = matched;
        matched.sort();
        let kept: Vec<usize> = matched.iter().map(|m| m.0).collect();
        for m in mappings.iter_mut().flatten() {
            *m = kept.iter().map(|&t| m[t]).collect();
        }
        mappings[gi] = Some(matched.iter().map(|m| m.1).collect());
        template_atoms = kept.iter().map(|&t| template_atoms[t]).collect();
        template = graphs[first].induced_subgraph(&template_atoms);
        if template.is_empty() {
            break;
        }
    }
    let n = template.atom_count();
    let mappings = mappings.into_iter().map(|m| m.filter(|m| m.len() == n).unwrap_or_default()).collect();
    Ok(McsResult { template, mappings, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn mcs(smiles: &[&str]) -> McsResult {
        let graphs: Vec<MolecularGraph> = smiles.iter().map(|s| parse_smiles(s).unwrap()).collect();
        let refs: Vec<&MolecularGraph> = graphs.iter().collect();
        let r = find_mcs(&refs, DEFAULT_MCS_BUDGET).unwrap();
        check_mappings(&r, &refs);
        r
    }

    fn check_mappings(r: &McsResult, graphs: &[&MolecularGraph]) {
        let t = &r.template;
        for (g, m) in graphs.iter().zip(&r.mappings) {
            if t.is_empty() {
                continue;
            }
            assert_eq!(m.len(), t.atom_count());
            let mut seen = m.clone();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), m.len(), "mapping is not injective");
            for a in 0..t.atom_count() {
                assert_eq!(t.atoms()[a].element, g.atoms()[m[a]].element);
                for b in 0..t.atom_count() {
                    if a != b {
                        assert_eq!(t.bond_between(a, b).is_some(), g.bond_between(m[a], m[b]).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn ethane_and_ethanol() {
        let r = mcs(&["CC", "CCO"]);
        assert_eq!(r.template.atom_count(), 2);
        assert_eq!(r.template.bond_count(), 1);
        assert!(r.exact);
    }

    #[test]
    fn no_shared_element_is_empty() {
        let r = mcs(&["C", "O"]);
        assert!(r.is_empty());
    }

    #[test]
    fn self_match_is_whole_graph() {
        let r = mcs(&["c1ccc2ccccc2c1CCN", "c1ccc2ccccc2c1CCN"]);
        assert_eq!(r.template.atom_count(), 13);
        assert_eq!(r.template.bond_count(), 14);
    }

    #[test]
    fn three_way_fold() {
        let r = mcs(&["c1ccccc1CCN", "c1ccccc1CCO", "Cc1ccccc1"]);
        // Benzene ring plus one attached carbon.
        assert_eq!(r.template.atom_count(), 7);
        assert_eq!(r.mappings.len(), 3);
    }

    #[test]
    fn too_few_graphs() {
        let g = parse_smiles("CC").unwrap();
        assert!(find_mcs(&[&g], DEFAULT_MCS_BUDGET).is_err());
    }
}
