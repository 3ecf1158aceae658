//! Per-compound trustworthiness of a projection: how well each compound's
//! distances to all others survive the reduction to 2D.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{pairwise_cosine_distances, pairwise_euclidean_distances, projection_distances};
use super::{DistanceMatrix, DrError, EmbeddingMatrix, Metric, Projection2D, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustKind {
    Pearson,
    #[default]
    Kendall,
}

/// How ties enter the Kendall denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KendallTies {
    /// `(C - D) / (m (m - 1) / 2)`.
    #[default]
    TauA,
    /// `(C - D) / sqrt((N0 - Tx) (N0 - Ty))`.
    TauB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrustConfig {
    pub high_metric: Metric,
    pub low_metric: Metric,
    pub ties: KendallTies,
}

impl Default for TrustConfig {
    fn default() -> Self {
        TrustConfig { high_metric: Metric::Cosine, low_metric: Metric::Euclidean, ties: KendallTies::TauA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustScores {
    pub representation: Representation,
    pub ids: Vec<String>,
    pub pearson_r: Vec<f64>,
    pub kendall_tau: Vec<f64>,
    /// Compounds whose Pearson r was forced to 0 by a zero-variance row.
    pub degenerate: Vec<bool>,
}

impl TrustScores {
    pub fn scores(&self, kind: TrustKind) -> &[f64] {
        match kind {
            TrustKind::Pearson => &self.pearson_r,
            TrustKind::Kendall => &self.kendall_tau,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

struct PairCounts {
    n0: i64,
    /// `C - D`.
    net: i64,
    ties_x: i64,
    ties_y: i64,
}

fn tied_pairs(run: i64) -> i64 {
    run * (run - 1) / 2
}

fn count_pairs(x: &[f64], y: &[f64]) -> PairCounts {
    let m = x.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let (mut ties_x, mut ties_xy) = (0, 0);
    let (mut run_x, mut run_xy) = (1i64, 1i64);
    for w in order.windows(2) {
        if x[w[0]] == x[w[1]] {
            run_x += 1;
            if y[w[0]] == y[w[1]] {
                run_xy += 1;
            } else {
                ties_xy += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += tied_pairs(run_x);
            ties_xy += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += tied_pairs(run_x);
    ties_xy += tied_pairs(run_xy);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; m];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ties_y = 0;
    let mut run_y = 1i64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            ties_y += tied_pairs(run_y);
            run_y = 1;
        }
    }
    ties_y += tied_pairs(run_y);

    let n0 = tied_pairs(m as i64);
    PairCounts { n0, net: n0 - ties_x - ties_y + ties_xy - 2 * swaps, ties_x, ties_y }
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        merge_count(l, &mut buf[..mid]) + merge_count(r, &mut buf[mid..])
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall tau-a in O(m log m): tied pairs count as neither concordant nor
/// discordant.
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> Result<f64, DrError> {
    kendall(x, y, KendallTies::TauA)
}

fn kendall(x: &[f64], y: &[f64], ties: KendallTies) -> Result<f64, DrError> {
    if x.len() != y.len() {
        return Err(DrError::Shape(format!("rank vectors of length {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(DrError::Shape(format!("Kendall tau needs at least 2 values, got {}", x.len())));
    }
    let c = count_pairs(x, y);
    Ok(match ties {
        KendallTies::TauA => c.net as f64 / c.n0 as f64,
        KendallTies::TauB => {
            let denom = ((c.n0 - c.ties_x) as f64 * (c.n0 - c.ties_y) as f64).sqrt();
            if denom == 0.0 {
                0.0
            } else {
                (c.net as f64 / denom).clamp(-1.0, 1.0)
            }
        }
    })
}

/// Pearson r between row `k` of both matrices, diagonal excluded. Returns
/// `(0, true)` when either row has zero variance.
pub fn pearson_trust(high: &DistanceMatrix, low: &DistanceMatrix, k: usize) -> (f64, bool) {
    match pearson(&high.row_without_diagonal(k), &low.row_without_diagonal(k)) {
        Some(r) => (r, false),
        None => (0.0, true),
    }
}

/// Kendall tau-a between row `k` of both matrices, diagonal excluded.
pub fn kendall_trust(high: &DistanceMatrix, low: &DistanceMatrix, k: usize) -> Result<f64, DrError> {
    kendall_tau_a(&high.row_without_diagonal(k), &low.row_without_diagonal(k))
}

/// Scores every compound from precomputed distance matrices.
pub fn trust_from_distances(
    representation: Representation,
    ids: &[String],
    high: &DistanceMatrix,
    low: &DistanceMatrix,
    ties: KendallTies,
) -> Result<TrustScores, DrError> {
    let n = ids.len();
    if high.len() != n || low.len() != n {
        return Err(DrError::Shape(format!(
            "distance matrices of size {} and {} for {n} compounds",
            high.len(),
            low.len()
        )));
    }
    if n < 3 {
        return Err(DrError::Shape(format!("trust scores need at least 3 compounds, got {n}")));
    }
    let rows: Vec<Result<(f64, bool, f64), DrError>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (r, degenerate) = pearson_trust(high, low, k);
            let tau = kendall(&high.row_without_diagonal(k), &low.row_without_diagonal(k), ties)?;
            Ok((r, degenerate, tau))
        })
        .collect();
    let mut out = TrustScores {
        representation,
        ids: ids.to_vec(),
        pearson_r: Vec::with_capacity(n),
        kendall_tau: Vec::with_capacity(n),
        degenerate: Vec::with_capacity(n),
    };
    for row in rows {
        let (r, degenerate, tau) = row?;
        out.pearson_r.push(r);
        out.degenerate.push(degenerate);
        out.kendall_tau.push(tau);
    }
    Ok(out)
}

/// Trust scores of `projection` against its source `matrix`.
pub fn compute_trust_scores(
    matrix: &EmbeddingMatrix,
    projection: &Projection2D,
    config: &TrustConfig,
) -> Result<TrustScores, DrError> {
    if matrix.ids() != projection.ids() {
        return Err(DrError::Shape("projection rows are not aligned with the matrix".into()));
    }
    let high = match config.high_metric {
        Metric::Cosine => pairwise_cosine_distances(matrix)?,
        Metric::Euclidean => pairwise_euclidean_distances(matrix),
    };
    let low = projection_distances(projection, config.low_metric)?;
    trust_from_distances(matrix.representation, matrix.ids(), &high, &low, config.ties)
}
