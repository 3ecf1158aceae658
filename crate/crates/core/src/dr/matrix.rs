use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DrError;

/// One of the vector-based molecular representations a projection is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Ecfp,
    Path,
    Descriptors,
    Embeddings,
}

impl Representation {
    pub const ALL: [Representation; 4] =
        [Representation::Ecfp, Representation::Path, Representation::Descriptors, Representation::Embeddings];

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Ecfp => "ecfp",
            Representation::Path => "path",
            Representation::Descriptors => "descriptors",
            Representation::Embeddings => "embeddings",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = DrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Representation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| DrError::UnknownRepresentation(s.to_string()))
    }
}

/// Row-major `n x d` feature matrix with one compound id per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub representation: Representation,
    ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Checks the shape invariants: `n >= 3`, `d >= 2`, equal row lengths, no NaN.
    pub fn new(
        representation: Representation,
        ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<EmbeddingMatrix, DrError> {
        if ids.len() != rows.len() {
            return Err(DrError::Shape(format!("{} ids for {} rows", ids.len(), rows.len())));
        }
        if rows.len() < 3 {
            return Err(DrError::Shape(format!("need at least 3 rows, got {}", rows.len())));
        }
        let dim = rows[0].len();
        if dim < 2 {
            return Err(DrError::Shape(format!("need at least 2 columns, got {dim}")));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (id, row) in ids.iter().zip(&rows) {
            if row.len() != dim {
                return Err(DrError::Shape(format!("row `{id}` has {} columns, expected {dim}", row.len())));
            }
            if row.iter().any(|v| v.is_nan()) {
                return Err(DrError::NonFinite(id.clone()));
            }
            values.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix { representation, ids, dim, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionSource {
    Tsne,
    Parametric,
}

/// 2D coordinates, one row per compound of the source matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub representation: Representation,
    pub source: ProjectionSource,
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
}

impl Projection2D {
    pub fn new(
        representation: Representation,
        source: ProjectionSource,
        ids: Vec<String>,
        coords: Vec<[f64; 2]>,
    ) -> Result<Projection2D, DrError> {
        if ids.len() != coords.len() {
            return Err(DrError::Shape(format!("{} ids for {} points", ids.len(), coords.len())));
        }
        if let Some((id, _)) = ids.iter().zip(&coords).find(|(_, c)| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(DrError::NonFinite(id.clone()));
        }
        Ok(Projection2D { representation, source, ids, coords })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<[f64; 2]> {
        self.ids.iter().position(|x| x == id).map(|i| self.coords[i])
    }

    /// Largest of the x and y extents.
    pub fn span(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.coords {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        if self.coords.is_empty() {
            0.0
        } else {
            (hi[0] - lo[0]).max(hi[1] - lo[1])
        }
    }
}
