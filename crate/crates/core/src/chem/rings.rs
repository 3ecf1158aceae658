//! Smallest set of smallest rings.
//!
//! Candidate cycles come from Horton's construction (for every vertex `v` and
//! edge `(x, y)`, the cycle `v ~> x - y ~> v` along shortest paths); the
//! minimum cycle basis is then picked greedily by length with Gaussian
//! elimination over GF(2) on edge-incidence vectors.

use std::collections::{HashSet, VecDeque};

type EdgeSet = Vec<u64>;

fn set_bit(set: &mut EdgeSet, i: usize) {
    set[i / 64] |= 1 << (i % 64);
}

fn has_bit(set: &EdgeSet, i: usize) -> bool {
    set[i / 64] >> (i % 64) & 1 == 1
}

fn popcount(set: &EdgeSet) -> u32 {
    set.iter().map(|w| w.count_ones()).sum()
}

fn lowest_bit(set: &EdgeSet) -> Option<usize> {
    set.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// `adjacency[a]` lists `(neighbor, edge index)`. Returns rings as atom index
/// cycles in traversal order, smallest first.
pub(crate) fn smallest_set_of_smallest_rings(
    n_atoms: usize,
    edges: &[(usize, usize)],
    adjacency: &[Vec<(usize, usize)>],
) -> Vec<Vec<usize>> {
    let n_components = count_components(n_atoms, adjacency);
    let cyclomatic = edges.len() + n_components - n_atoms;
    if cyclomatic == 0 {
        return Vec::new();
    }
    let words = edges.len().div_ceil(64);

    let mut seen: HashSet<EdgeSet> = HashSet::new();
    let mut candidates: Vec<EdgeSet> = Vec::new();
    for root in 0..n_atoms {
        let (parent_edge, dist) = bfs_tree(root, n_atoms, adjacency);
        for (e, &(x, y)) in edges.iter().enumerate() {
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent_edge[x] == Some(e) || parent_edge[y] == Some(e) {
                continue;
            }
            let path_x = tree_path(x, &parent_edge, edges);
            let path_y = tree_path(y, &parent_edge, edges);
            // Paths must only share the root.
            let atoms_x = path_atoms(x, &parent_edge, edges);
            let atoms_y = path_atoms(y, &parent_edge, edges);
            if atoms_x.iter().filter(|a| atoms_y.contains(a)).count() != 1 {
                continue;
            }
            let mut cycle = vec![0u64; words];
            for &pe in path_x.iter().chain(path_y.iter()) {
                set_bit(&mut cycle, pe);
            }
            set_bit(&mut cycle, e);
            if seen.insert(cycle.clone()) {
                candidates.push(cycle);
            }
        }
    }
    candidates.sort_by(|a, b| popcount(a).cmp(&popcount(b)).then_with(|| a.cmp(b)));

    let mut basis: Vec<(usize, EdgeSet)> = Vec::new();
    let mut chosen = Vec::new();
    for cycle in candidates {
        let mut reduced = cycle.clone();
        for (pivot, row) in &basis {
            if has_bit(&reduced, *pivot) {
                for (r, b) in reduced.iter_mut().zip(row) {
                    *r ^= b;
                }
            }
        }
        if let Some(pivot) = lowest_bit(&reduced) {
            // Keep rows reduced on earlier pivots so elimination stays single-pass.
            for (_, row) in basis.iter_mut() {
                if has_bit(row, pivot) {
                    for (r, b) in row.iter_mut().zip(&reduced) {
                        *r ^= b;
                    }
                }
            }
            basis.push((pivot, reduced));
            chosen.push(cycle);
            if chosen.len() == cyclomatic {
                break;
            }
        }
    }
    chosen.iter().map(|c| order_cycle(c, edges)).collect()
}

fn count_components(n_atoms: usize, adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; n_atoms];
    let mut count = 0;
    for start in 0..n_atoms {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(a) = stack.pop() {
            for &(nb, _) in &adjacency[a] {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    count
}

fn bfs_tree(root: usize, n_atoms: usize, adjacency: &[Vec<(usize, usize)>]) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut parent_edge = vec![None; n_atoms];
    let mut dist = vec![usize::MAX; n_atoms];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        for &(nb, e) in &adjacency[a] {
            if dist[nb] == usize::MAX {
                dist[nb] = dist[a] + 1;
                parent_edge[nb] = Some(e);
                queue.push_back(nb);
            }
        }
    }
    (parent_edge, dist)
}

fn step_up(atom: usize, edge: usize, edges: &[(usize, usize)]) -> usize {
    let (a, b) = edges[edge];
    if a == atom {
        b
    } else {
        a
    }
}

fn tree_path(mut atom: usize, parent_edge: &[Option<usize>], edges: &[(usize, usize)]) -> Vec<usize> {
    let mut path = Vec::new();
    while let Some(e) = parent_edge[atom] {
        path.push(e);
        atom = step_up(atom, e, edges);
    }
    path
}

fn path_atoms(mut atom: usize, parent_edge: &[Option<usize>], edges: &[(usize, usize)]) -> Vec<usize> {
    let mut atoms = vec![atom];
    while let Some(e) = parent_edge[atom] {
        atom = step_up(atom, e, edges);
        atoms.push(atom);
    }
    atoms
}

fn order_cycle(cycle: &EdgeSet, edges: &[(usize, usize)]) -> Vec<usize> {
    let ring_edges: Vec<(usize, usize)> = (0..edges.len()).filter(|&e| has_bit(cycle, e)).map(|e| edges[e]).collect();
    let start = ring_edges.iter().map(|&(a, b)| a.min(b)).min().unwrap_or(0);
    let mut order = vec![start];
    let mut used = vec![false; ring_edges.len()];
    let mut current = start;
    loop {
        // Step to the smaller neighbor first so the orientation is deterministic.
        let next = ring_edges
            .iter()
            .enumerate()
            .filter(|(i, &(a, b))| !used[*i] && (a == current || b == current))
            .map(|(i, &(a, b))| (if a == current { b } else { a }, i))
            .min();
        match next {
            Some((atom, i)) => {
                used[i] = true;
                if atom == start {
                    break;
                }
                order.push(atom);
                current = atom;
            }
            None => break,
        }
    }
    order
}
