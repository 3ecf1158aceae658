use serde::{Deserialize, Serialize};

use super::ViewError;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Axial coordinates of a pointy-top hexagon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl Axial {
    pub fn new(q: i32, r: i32) -> Axial {
        Axial { q, r }
    }

    /// The six adjacent cells.
    pub fn neighbors(self) -> [Axial; 6] {
        [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)].map(|(dq, dr)| Axial::new(self.q + dq, self.r + dr))
    }
}

/// Pointy-top hexagonal tiling anchored at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexGrid {
    pub origin: [f64; 2],
    pub circumradius: f64,
}

impl HexGrid {
    pub fn new(origin: [f64; 2], circumradius: f64) -> Result<HexGrid, ViewError> {
        if !(circumradius > 0.0 && circumradius.is_finite()) {
            return Err(ViewError::InvalidRadius(circumradius));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(ViewError::NonFinite("grid origin".into()));
        }
        Ok(HexGrid { origin, circumradius })
    }

    /// Radius giving about twenty columns across the larger extent of `points`,
    /// with the origin at their lower-left corner.
    pub fn default_for(points: &[[f64; 2]]) -> Result<HexGrid, ViewError> {
        let (lo, hi) = bounds(points);
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let radius = if span > 0.0 { span / (20.0 * SQRT3) } else { 1.0 };
        HexGrid::new(lo, radius)
    }

    pub fn with_radius(self, circumradius: f64) -> Result<HexGrid, ViewError> {
        HexGrid::new(self.origin, circumradius)
    }

    pub fn area(&self) -> f64 {
        1.5 * SQRT3 * self.circumradius * self.circumradius
    }

    pub fn center(&self, h: Axial) -> [f64; 2] {
        let s = self.circumradius;
        [self.origin[0] + s * SQRT3 * (h.q as f64 + h.r as f64 / 2.0), self.origin[1] + s * 1.5 * h.r as f64]
    }

    /// Corner points, counter-clockwise from the one at 30 degrees.
    pub fn corners(&self, h: Axial) -> [[f64; 2]; 6] {
        let c = self.center(h);
        std::array::from_fn(|k| {
            let angle = std::f64::consts::PI / 180.0 * (60.0 * k as f64 - 30.0);
            [c[0] + self.circumradius * angle.cos(), c[1] + self.circumradius * angle.sin()]
        })
    }

    /// Cell whose center is nearest to `p`, by cube rounding.
    pub fn locate(&self, p: [f64; 2]) -> Axial {
        let x = (p[0] - self.origin[0]) / self.circumradius;
        let y = (p[1] - self.origin[1]) / self.circumradius;
        let fq = SQRT3 / 3.0 * x - y / 3.0;
        let fr = 2.0 / 3.0 * y;
        cube_round(fq, fr, -fq - fr)
    }
}

fn cube_round(fq: f64, fr: f64, fs: f64) -> Axial {
    let (mut q, mut r, s) = (fq.round(), fr.round(), fs.round());
    let (dq, dr, ds) = ((q - fq).abs(), (r - fr).abs(), (s - fs).abs());
    if dq > dr && dq > ds {
        q = -r - s;
    } else if dr > ds {
        r = -q - s;
    }
    Axial::new(q as i32, r as i32)
}

pub(crate) fn bounds(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if points.is_empty() {
        ([0.0; 2], [0.0; 2])
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_round_trip() {
        let g = HexGrid::new([0.3, -1.1], 0.7).unwrap();
        for q in -5..5 {
            for r in -5..5 {
                let h = Axial::new(q, r);
                assert_eq!(g.locate(g.center(h)), h);
            }
        }
    }

    #[test]
    fn neighbors_are_one_column_apart() {
        let g = HexGrid::new([0.0, 0.0], 1.0).unwrap();
        let c = g.center(Axial::new(2, -1));
        for n in Axial::new(2, -1).neighbors() {
            let d = g.center(n);
            assert!(((d[0] - c[0]).hypot(d[1] - c[1]) - SQRT3).abs() < 1e-12);
        }
    }

    #[test]
    fn corners_lie_on_the_circumcircle() {
        let g = HexGrid::new([1.0, 2.0], 2.0).unwrap();
        let c = g.center(Axial::new(1, 1));
        for k in g.corners(Axial::new(1, 1)) {
            assert!(((k[0] - c[0]).hypot(k[1] - c[1]) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(HexGrid::new([0.0, 0.0], 0.0).is_err());
        assert!(HexGrid::new([0.0, 0.0], f64::NAN).is_err());
    }
}
