use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::AlignError;

/// Proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> RigidTransform {
        RigidTransform { rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], translation: [0.0; 3] }
    }

    pub fn translation(t: [f64; 3]) -> RigidTransform {
        RigidTransform { translation: t, ..RigidTransform::identity() }
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + self.translation[i])
    }

    fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.rotation[i][j])
    }

    /// Largest entry of `|RᵀR - I|` and `|det R - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation_matrix();
        let e = (r.transpose() * r - Matrix3::identity()).abs().max();
        e.max((r.determinant() - 1.0).abs())
    }
}

fn centroid(points: &[[f64; 3]]) -> Vector3<f64> {
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p));
    sum / points.len() as f64
}

/// Root-mean-square distance between paired points.
pub fn rmsd(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (Vector3::from(*p) - Vector3::from(*q)).norm_squared()).sum();
    (sum / a.len() as f64).sqrt()
}

/// Least-squares rigid transform taking `moving[i]` onto `reference[i]`,
/// and the RMSD after applying it.
pub fn kabsch(reference: &[[f64; 3]], moving: &[[f64; 3]]) -> Result<(RigidTransform, f64), AlignError> {
    if reference.len() != moving.len() {
        return Err(AlignError::Correspondence(format!(
            "{} reference points for {} moving points",
            reference.len(),
            moving.len()
        )));
    }
    if reference.len() < 3 {
        return Err(AlignError::Underdetermined(format!("{} point pairs", reference.len())));
    }
    if reference.iter().chain(moving).flatten().any(|v| !v.is_finite()) {
        return Err(AlignError::NonFinite);
    }
    let (cr, cm) = (centroid(reference), centroid(moving));
    let mut h = Matrix3::zeros();
    let mut scatter_r = Matrix3::zeros();
    let mut scatter_m = Matrix3::zeros();
    for (r, m) in reference.iter().zip(moving) {
        let (r, m) = (Vector3::from(*r) - cr, Vector3::from(*m) - cm);
        h += m * r.transpose();
        scatter_r += r * r.transpose();
        scatter_m += m * m.transpose();
    }
    for s in [scatter_r, scatter_m] {
        let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        if ev[1] <= 1e-12 * ev[0].max(1e-300) {
            return Err(AlignError::Underdetermined("corresponding points are collinear".into()));
        }
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let rot = v * correction * u.transpose();
    let t = cr - rot * cm;
    let transform = RigidTransform {
        rotation: std::array::from_fn(|i| std::array::from_fn(|j| rot[(i, j)])),
        translation: [t[0], t[1], t[2]],
    };
    let moved: Vec<[f64; 3]> = moving.iter().map(|&p| transform.apply(p)).collect();
    let error = rmsd(reference, &moved);
    Ok((transform, error))
}
