use serde::{Deserialize, Serialize};

use crate::chem::Element;

pub const DEFAULT_CLUSTER_RADIUS: f64 = 0.5;
pub const DEFAULT_OPACITY_FLOOR: f64 = 0.1;

/// One aligned structure: atom elements and positions in the common frame.
#[derive(Debug, Clone, Copy)]
pub struct PlacedAtoms<'a> {
    pub elements: &'a [Element],
    pub positions: &'a [[f64; 3]],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    /// Per structure, per atom: distinct structures in the atom's cluster.
    pub counts: Vec<Vec<usize>>,
    /// Per structure, per atom: `max(count / structures, floor)`.
    pub opacity: Vec<Vec<f64>>,
}

/// Single-linkage clusters of same-element atoms within `radius` of each
/// other, across all structures. An atom's opacity is the fraction of
/// structures present in its cluster.
pub fn occurrence_opacity(structures: &[PlacedAtoms<'_>], radius: f64, floor: f64) -> Occurrence {
    let mut owner = Vec::new();
    let mut elements = Vec::new();
    let mut points = Vec::new();
    for (s, st) in structures.iter().enumerate() {
        for (e, p) in st.elements.iter().zip(st.positions) {
            owner.push(s);
            elements.push(*e);
            points.push(*p);
        }
    }
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let r2 = radius * radius;
    for i in 0..n {
        for j in i + 1..n {
            if elements[i] != elements[j] {
                continue;
            }
            let d2: f64 = (0..3).map(|k| (points[i][k] - points[j][k]).powi(2)).sum();
            if d2 <= r2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut members: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        members.entry(root).or_default().push(owner[i]);
    }
    let distinct: std::collections::HashMap<usize, usize> = members
        .into_iter()
        .map(|(root, mut owners)| {
            owners.sort_unstable();
            owners.dedup();
            (root, owners.len())
        })
        .collect();
    let total = structures.len() as f64;
    let mut counts = Vec::with_capacity(structures.len());
    let mut opacity = Vec::with_capacity(structures.len());
    let mut k = 0;
    for st in structures {
        let c: Vec<usize> = (0..st.elements.len())
            .map(|_| {
                let root = find(&mut parent, k);
                k += 1;
                distinct[&root]
            })
            .collect();
        opacity.push(c.iter().map(|&x| (x as f64 / total).max(floor)).collect());
        counts.push(c);
    }
    Occurrence { counts, opacity }
}

/// `1 - o + floor`, clamped into `[floor, 1]`.
pub fn invert_opacity(o: f64, floor: f64) -> f64 {
    (1.0 - o + floor).clamp(floor, 1.0)
}

/// A bond is as opaque as its fainter endpoint.
pub fn bond_opacity(atom_opacity: &[f64], a: usize, b: usize) -> f64 {
    atom_opacity[a].min(atom_opacity[b])
}
