use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DrError, EmbeddingMatrix, Projection2D};

/// Symmetric `n x n` distance matrix with a zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> DistanceMatrix {
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                if i != j {
                    // Evaluate with the smaller index first so both halves match bitwise.
                    *v = if i < j { f(i, j) } else { f(j, i) };
                }
            }
        });
        DistanceMatrix { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Row `k` with the diagonal entry removed.
    pub fn row_without_diagonal(&self, k: usize) -> Vec<f64> {
        self.row(k).iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &v)| v).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn cosine(x: &[f64], y: &[f64], nx: f64, ny: f64) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (1.0 - dot / (nx * ny).sqrt()).clamp(0.0, 2.0)
}

/// `d(i, j) = 1 - x_i . x_j / (|x_i| |x_j|)`.
pub fn pairwise_cosine_distances(matrix: &EmbeddingMatrix) -> Result<DistanceMatrix, DrError> {
    let norms: Vec<f64> = matrix.iter_rows().map(norm_sq).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(DrError::ZeroRow(matrix.ids()[i].clone()));
    }
    Ok(DistanceMatrix::from_fn(matrix.rows(), |i, j| cosine(matrix.row(i), matrix.row(j), norms[i], norms[j])))
}

pub fn pairwise_euclidean_distances(matrix: &EmbeddingMatrix) -> DistanceMatrix {
    DistanceMatrix::from_fn(matrix.rows(), |i, j| euclidean(matrix.row(i), matrix.row(j)))
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Distances between projected points under `metric`.
pub fn projection_distances(projection: &Projection2D, metric: Metric) -> Result<DistanceMatrix, DrError> {
    let coords = projection.coords();
    match metric {
        Metric::Euclidean => Ok(DistanceMatrix::from_fn(coords.len(), |i, j| euclidean(&coords[i], &coords[j]))),
        Metric::Cosine => {
            let norms: Vec<f64> = coords.iter().map(|c| norm_sq(c)).collect();
            if let Some(i) = norms.iter().position(|&n| n == 0.0) {
                return Err(DrError::ZeroRow(projection.ids()[i].clone()));
            }
            Ok(DistanceMatrix::from_fn(coords.len(), |i, j| cosine(&coords[i], &coords[j], norms[i], norms[j])))
        }
    }
}
