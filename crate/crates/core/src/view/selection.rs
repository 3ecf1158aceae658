use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::bins::HexLayout;
use super::hex::Axial;
use super::ViewError;
use crate::dr::Projection2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionSource {
    Hexes,
    Lasso,
    Table,
    NewCompound,
    Combined,
}

/// Deduplicated set of compound ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub ids: BTreeSet<String>,
    pub source: SelectionSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Selection {
    pub fn new(ids: impl IntoIterator<Item = String>, source: SelectionSource) -> Selection {
        Selection { ids: ids.into_iter().collect(), source, name: None }
    }

    pub fn named(mut self, name: impl Into<String>) -> Selection {
        self.name = Some(name.into());
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn union(&self, other: &Selection) -> Selection {
        Selection::new(self.ids.union(&other.ids).cloned(), SelectionSource::Combined)
    }

    pub fn intersection(&self, other: &Selection) -> Selection {
        Selection::new(self.ids.intersection(&other.ids).cloned(), SelectionSource::Combined)
    }

    /// Errors with every id that `known` does not contain.
    pub fn validate<'a>(&self, known: impl IntoIterator<Item = &'a str>) -> Result<(), ViewError> {
        let known: BTreeSet<&str> = known.into_iter().collect();
        let missing: Vec<String> = self.ids.iter().filter(|id| !known.contains(id.as_str())).cloned().collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ViewError::UnknownCompounds(missing))
        }
    }
}

/// Members of the listed hexagons; cells with no bin contribute nothing.
pub fn select_hexes(layout: &HexLayout, cells: &[Axial]) -> Selection {
    let ids = cells.iter().filter_map(|&c| layout.bin(c)).flat_map(|b| b.ids.iter().cloned());
    Selection::new(ids, SelectionSource::Hexes)
}

/// Whether `p` lies inside the closed polygon under the even-odd rule.
/// Points on an edge count as inside.
pub fn point_in_polygon(p: [f64; 2], polygon: &[[f64; 2]]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    cross == 0.0 && p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Compounds whose projected points fall inside `polygon`.
pub fn lasso_select(projection: &Projection2D, polygon: &[[f64; 2]]) -> Result<Selection, ViewError> {
    if polygon.len() < 3 {
        return Err(ViewError::Polygon(polygon.len()));
    }
    if polygon.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(ViewError::NonFinite("lasso vertex".into()));
    }
    let ids = projection
        .ids()
        .iter()
        .zip(projection.coords())
        .filter(|(_, &c)| point_in_polygon(c, polygon))
        .map(|(id, _)| id.clone());
    Ok(Selection::new(ids, SelectionSource::Lasso))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Counts crossings of the upward vertical ray in exact integer arithmetic.
    fn oracle(p: (i64, i64), poly: &[(i64, i64)]) -> bool {
        let n = poly.len();
        let mut crossings = 0;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross == 0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1) {
                return true;
            }
            let (l, r) = if a.0 <= b.0 { (a, b) } else { (b, a) };
            // Half-open in x so shared vertices are counted once.
            if l.0 <= p.0 && p.0 < r.0 {
                // Crossing above p iff the edge's y at p.0 exceeds p.1.
                let lhs = (l.1 - p.1) * (r.0 - l.0) + (r.1 - l.1) * (p.0 - l.0);
                if lhs > 0 {
                    crossings += 1;
                }
            }
        }
        crossings % 2 == 1
    }

    #[test]
    fn triangle_contains_all_or_none() {
        let ids = (0..4).map(|i| i.to_string()).collect();
        let p = Projection2D::new(
            crate::dr::Representation::Ecfp,
            crate::dr::ProjectionSource::Tsne,
            ids,
            vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.5], [0.5, 1.5]],
        )
        .unwrap();
        assert_eq!(lasso_select(&p, &[[-10.0, -10.0], [10.0, -10.0], [0.0, 10.0]]).unwrap().len(), 4);
        assert!(lasso_select(&p, &[[20.0, 20.0], [21.0, 20.0], [20.0, 21.0]]).unwrap().is_empty());
        assert!(lasso_select(&p, &[[0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn boundary_counts_as_inside() {
        let square = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert!(point_in_polygon([1.0, 0.0], &square));
        assert!(point_in_polygon([2.0, 2.0], &square));
        assert!(point_in_polygon([0.0, 1.3], &square));
        assert!(!point_in_polygon([2.1, 1.0], &square));
    }

    #[test]
    fn set_operations() {
        let a = Selection::new(["x", "y", "z"].map(String::from), SelectionSource::Table);
        let b = Selection::new(["y", "z", "w", "w"].map(String::from), SelectionSource::Lasso);
        assert_eq!(b.len(), 3);
        assert_eq!(a.union(&b).len(), 4);
        assert_eq!(a.intersection(&b).ids.into_iter().collect::<Vec<_>>(), vec!["y", "z"]);
        assert!(a.validate(["x", "y"]).is_err());
    }

    proptest! {
        #[test]
        fn matches_integer_oracle(
            poly in prop::collection::vec((-20i64..20, -20i64..20), 3..9),
            pts in prop::collection::vec((-25i64..25, -25i64..25), 1..60),
        ) {
            let fpoly: Vec<[f64; 2]> = poly.iter().map(|&(x, y)| [x as f64, y as f64]).collect();
            for &p in &pts {
                prop_assert_eq!(point_in_polygon([p.0 as f64, p.1 as f64], &fpoly), oracle(p, &poly));
            }
        }
    }
}
