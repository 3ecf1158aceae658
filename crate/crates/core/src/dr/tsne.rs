//! Exact O(n²) t-SNE.
//!
//! Per-row Gaussian bandwidths are found by bisection on the precision so
//! each conditional distribution hits the target perplexity; the joint `P`
//! is the symmetrized, normalized conditional matrix. The embedding is
//! optimized with momentum gradient descent, per-coordinate gains, and an
//! early-exaggeration phase.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{pairwise_cosine_distances, Metric};
use super::{DrError, EmbeddingMatrix, Projection2D, ProjectionSource};

/// Bisection steps allowed per row before the bandwidth search gives up.
pub const MAX_BANDWIDTH_STEPS: usize = 200;
/// Achieved perplexity must be this close to the target.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-5;
const MIN_GAIN: f64 = 0.01;
const MIN_GRAD_NORM: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub max_epochs: usize,
    /// Stop once the best KL divergence has not improved for this many epochs.
    pub epochs_without_progress: usize,
    /// `None` takes `max(n / early_exaggeration / 4, 50)`.
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    pub early_exaggeration_epochs: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_epoch: usize,
    /// Standard deviation of the Gaussian initial layout.
    pub init_std: f64,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            max_epochs: 10_000,
            epochs_without_progress: 1_000,
            learning_rate: None,
            early_exaggeration: 12.0,
            early_exaggeration_epochs: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_epoch: 250,
            init_std: 1e-4,
            metric: Metric::Euclidean,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn with_perplexity(perplexity: f64) -> TsneConfig {
        TsneConfig { perplexity, ..TsneConfig::default() }
    }

    /// Checks the configuration against a dataset of `n` rows.
    pub fn validate(&self, n: usize) -> Result<(), DrError> {
        let upper = (n as f64 - 1.0) / 3.0;
        if !(self.perplexity > 1.0 && self.perplexity < upper) {
            return Err(DrError::Config(format!(
                "perplexity {} must lie in (1, {upper:.3}) for {n} rows",
                self.perplexity
            )));
        }
        if self.max_epochs < self.epochs_without_progress {
            return Err(DrError::Config(format!(
                "max_epochs {} is below epochs_without_progress {}",
                self.max_epochs, self.epochs_without_progress
            )));
        }
        if self.learning_rate.is_some_and(|lr| !(lr > 0.0))
            || !(self.early_exaggeration >= 1.0)
            || !(self.init_std > 0.0)
        {
            return Err(DrError::Config(
                "learning_rate and init_std must be positive, early_exaggeration at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_learning_rate(&self, n: usize) -> f64 {
        self.learning_rate.unwrap_or_else(|| (n as f64 / self.early_exaggeration / 4.0).max(50.0))
    }
}

#[derive(Debug, Clone)]
pub struct TsneFit {
    pub projection: Projection2D,
    /// KL(P||Q) of the initial layout.
    pub initial_kl: f64,
    /// KL(P||Q) of the returned layout.
    pub final_kl: f64,
    /// KL(P||Q) before every epoch's update, always against the unexaggerated `P`.
    pub kl_trace: Vec<f64>,
    pub epochs: usize,
    /// Perplexity reached by each row's bandwidth search.
    pub row_perplexities: Vec<f64>,
}

/// Input dissimilarities fed to the Gaussian kernel: squared Euclidean
/// distances, or plain cosine distances.
pub fn input_dissimilarities(matrix: &EmbeddingMatrix, metric: Metric) -> Result<Vec<f64>, DrError> {
    match metric {
        Metric::Euclidean => {
            let n = matrix.rows();
            let mut out = vec![0.0; n * n];
            out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let xi = matrix.row(i);
                for (j, v) in row.iter_mut().enumerate() {
                    if i != j {
                        let (a, b) = if i < j { (xi, matrix.row(j)) } else { (matrix.row(j), xi) };
                        *v = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                    }
                }
            });
            Ok(out)
        }
        Metric::Cosine => Ok(pairwise_cosine_distances(matrix)?.as_slice().to_vec()),
    }
}

/// Conditional distribution of one row at the target perplexity.
///
/// `dissim` excludes the row's own entry. Returns the probabilities and the
/// perplexity actually reached.
pub fn row_affinities(dissim: &[f64], perplexity: f64) -> Option<(Vec<f64>, f64)> {
    let target = perplexity.ln();
    let d_min = dissim.iter().copied().fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut probs = vec![0.0; dissim.len()];
    for _ in 0..MAX_BANDWIDTH_STEPS {
        let mut sum = 0.0;
        for (p, &d) in probs.iter_mut().zip(dissim) {
            *p = (-beta * (d - d_min)).exp();
            sum += *p;
        }
        let mut weighted = 0.0;
        for (p, &d) in probs.iter_mut().zip(dissim) {
            *p /= sum;
            weighted += *p * (d - d_min);
        }
        let entropy = sum.ln() + beta * weighted;
        let achieved = entropy.exp();
        if (achieved - perplexity).abs() < PERPLEXITY_TOLERANCE {
            return Some((probs, achieved));
        }
        if entropy > target {
            lo = beta;
            beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (beta + hi) };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    None
}

/// Symmetrized joint probabilities `P` (row-major `n x n`, zero diagonal,
/// summing to one) plus the perplexity reached for every row.
pub fn joint_probabilities(
    dissim: &[f64],
    n: usize,
    perplexity: f64,
    ids: &[String],
) -> Result<(Vec<f64>, Vec<f64>), DrError> {
    let rows: Vec<Result<(Vec<f64>, f64), DrError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dissim[i * n + j]).collect();
            row_affinities(&row, perplexity)
                .ok_or_else(|| DrError::BandwidthSearch { id: ids[i].clone(), steps: MAX_BANDWIDTH_STEPS })
        })
        .collect();
    let mut conditional = vec![0.0; n * n];
    let mut achieved = Vec::with_capacity(n);
    for (i, row) in rows.into_iter().enumerate() {
        let (probs, perp) = row?;
        achieved.push(perp);
        let mut k = 0;
        for j in 0..n {
            if j != i {
                conditional[i * n + j] = probs[k];
                k += 1;
            }
        }
    }
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = conditional[i * n + j] + conditional[j * n + i];
        }
    }
    let total: f64 = joint.iter().sum();
    for v in joint.iter_mut() {
        *v /= total;
    }
    Ok((joint, achieved))
}

/// Unnormalized Student-t kernel row sums; `Z` is their total.
fn kernel_row_sums(y: &[[f64; 2]]) -> Vec<f64> {
    y.par_iter()
        .enumerate()
        .map(|(i, yi)| y.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, yj)| 1.0 / (1.0 + sq_dist(yi, yj))).sum())
        .collect()
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// KL(P || Q) for layout `y`; terms with `p_ij = 0` contribute nothing.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    kl_and_gradient(p, y, 1.0).0
}

/// Analytic gradient of KL(P || Q) with respect to every coordinate.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    kl_and_gradient(p, y, 1.0).1
}

/// KL against the plain `P` and the gradient against `exaggeration * P`.
fn kl_and_gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> (f64, Vec<[f64; 2]>) {
    let n = y.len();
    let z: f64 = kernel_row_sums(y).iter().sum();
    let rows: Vec<(f64, [f64; 2])> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut kl = 0.0;
            let mut g = [0.0; 2];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let num = 1.0 / (1.0 + sq_dist(&y[i], &y[j]));
                let q = num / z;
                let pij = p[i * n + j];
                if pij > 0.0 {
                    kl += pij * (pij / q).ln();
                }
                let coeff = 4.0 * (exaggeration * pij - q) * num;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            (kl, g)
        })
        .collect();
    let kl = rows.iter().map(|r| r.0).sum();
    (kl, rows.into_iter().map(|r| r.1).collect())
}

/// Fits a 2D t-SNE layout of `matrix`.
pub fn fit_tsne(matrix: &EmbeddingMatrix, config: &TsneConfig) -> Result<TsneFit, DrError> {
    let n = matrix.rows();
    config.validate(n)?;
    let dissim = input_dissimilarities(matrix, config.metric)?;
    let (p, row_perplexities) = joint_probabilities(&dissim, n, config.perplexity, matrix.ids())?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.init_std).expect("positive std");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let learning_rate = config.effective_learning_rate(n);
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    let mut kl_trace = Vec::new();
    let mut best_kl = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs = 0;
    for epoch in 0..config.max_epochs {
        let exaggerating = epoch < config.early_exaggeration_epochs;
        let exaggeration = if exaggerating { config.early_exaggeration } else { 1.0 };
        let momentum =
            if epoch < config.momentum_switch_epoch { config.initial_momentum } else { config.final_momentum };
        let (kl, grad) = kl_and_gradient(&p, &y, exaggeration);
        if !kl.is_finite() {
            return Err(DrError::Diverged { last_finite: kl_trace.last().copied().unwrap_or(f64::NAN) });
        }
        kl_trace.push(kl);
        epochs = epoch + 1;

        if !exaggerating {
            if kl < best_kl {
                best_kl = kl;
                best_epoch = epoch;
            } else if epoch - best_epoch >= config.epochs_without_progress {
                break;
            }
            let grad_norm = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>().sqrt();
            if grad_norm < MIN_GRAD_NORM {
                break;
            }
        }

        for i in 0..n {
            for k in 0..2 {
                let reversing = grad[i][k] * velocity[i][k] < 0.0;
                gains[i][k] = if reversing { gains[i][k] + 0.2 } else { gains[i][k] * 0.8 };
                gains[i][k] = gains[i][k].max(MIN_GAIN);
                velocity[i][k] = momentum * velocity[i][k] - learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += velocity[i][k];
            }
        }
        let mean = y.iter().fold([0.0; 2], |acc, c| [acc[0] + c[0], acc[1] + c[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        for c in y.iter_mut() {
            c[0] -= mean[0];
            c[1] -= mean[1];
        }
    }

    let final_kl = kl_divergence(&p, &y);
    let initial_kl = kl_trace.first().copied().unwrap_or(final_kl);
    let projection = Projection2D::new(matrix.representation, ProjectionSource::Tsne, matrix.ids().to_vec(), y)?;
    Ok(TsneFit { projection, initial_kl, final_kl, kl_trace, epochs, row_perplexities })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_bounds() {
        assert!(TsneConfig::with_perplexity(45.0).validate(893).is_ok());
        assert!(TsneConfig::with_perplexity(10.0).validate(118).is_ok());
        assert!(TsneConfig::with_perplexity(5.0).validate(118).is_ok());
        assert!(TsneConfig::with_perplexity(1.0).validate(100).is_err());
        assert!(TsneConfig::with_perplexity(40.0).validate(118).is_err());
        let cfg = TsneConfig { max_epochs: 10, epochs_without_progress: 20, ..TsneConfig::default() };
        assert!(cfg.validate(1000).is_err());
    }

    #[test]
    fn bandwidth_search_hits_target() {
        let row: Vec<f64> = (0..40).map(|j| (j as f64 * 0.37).sin().abs() * 5.0 + j as f64 * 0.1).collect();
        for target in [2.0, 5.0, 12.5, 30.0] {
            let (probs, achieved) = row_affinities(&row, target).unwrap();
            assert!((achieved - target).abs() < 1e-3);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_distances_cannot_match_other_perplexities() {
        // Every bandwidth gives the uniform distribution (perplexity 4 here).
        assert!(row_affinities(&[1.0; 4], 2.0).is_none());
        let (_, achieved) = row_affinities(&[1.0; 4], 4.0).unwrap();
        assert!((achieved - 4.0).abs() < 1e-9);
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rows = (0..n).map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect()).collect();
        EmbeddingMatrix::new(crate::dr::Representation::Descriptors, (0..n).map(|i| format!("r{i}")).collect(), rows)
            .unwrap()
    }

    fn joint_for(m: &EmbeddingMatrix, perplexity: f64) -> (Vec<f64>, Vec<f64>) {
        let dissim = input_dissimilarities(m, Metric::Euclidean).unwrap();
        joint_probabilities(&dissim, m.rows(), perplexity, m.ids()).unwrap()
    }

    #[test]
    fn joint_probabilities_are_a_distribution() {
        let m = random_matrix(40, 6, 1);
        let (p, achieved) = joint_for(&m, 8.0);
        assert!(achieved.iter().all(|a| (a - 8.0).abs() < 1e-3));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..40 {
            assert_eq!(p[i * 40 + i], 0.0);
            for j in 0..40 {
                assert!(p[i * 40 + j] >= 0.0);
                assert_eq!(p[i * 40 + j], p[j * 40 + i]);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = random_matrix(10, 4, 2);
        let (p, _) = joint_for(&m, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<[f64; 2]> = (0..10).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
        let grad = kl_gradient(&p, &y);
        let h = 1e-6;
        for i in 0..10 {
            for k in 0..2 {
                let mut plus = y.clone();
                plus[i][k] += h;
                let mut minus = y.clone();
                minus[i][k] -= h;
                let numeric = (kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * h);
                let rel = (numeric - grad[i][k]).abs() / grad[i][k].abs().max(1e-12);
                assert!(rel < 1e-4, "point {i} axis {k}: {numeric} vs {}", grad[i][k]);
            }
        }
    }

    #[test]
    fn objective_is_translation_invariant() {
        let m = random_matrix(12, 3, 3);
        let (p, _) = joint_for(&m, 3.0);
        let y: Vec<[f64; 2]> = (0..12).map(|i| [(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let shifted: Vec<[f64; 2]> = y.iter().map(|c| [c[0] + 17.5, c[1] - 4.25]).collect();
        assert!((kl_divergence(&p, &y) - kl_divergence(&p, &shifted)).abs() < 1e-12);
    }

    #[test]
    fn equidistant_clusters_stay_equidistant() {
        // Three clusters of four on the vertices of a simplex; the perplexity
        // exceeds the cluster size so every cluster is tied to the others.
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let noise = Normal::new(0.0, 0.05).unwrap();
            let rows: Vec<Vec<f64>> = (0..12)
                .map(|i| (0..3).map(|k| if k == i % 3 { 8.0 } else { 0.0 } + noise.sample(&mut rng)).collect())
                .collect();
            let m = EmbeddingMatrix::new(
                crate::dr::Representation::Descriptors,
                (0..12).map(|i| format!("p{i}")).collect(),
                rows,
            )
            .unwrap();
            let config = TsneConfig { seed, ..TsneConfig::with_perplexity(3.5) };
            let fit = fit_tsne(&m, &config).unwrap();
            assert!(fit.final_kl <= fit.initial_kl);
            assert!(fit.kl_trace.iter().all(|&kl| kl >= 0.0));
            let centroid = |c: usize| {
                let pts: Vec<_> = fit.projection.coords().iter().skip(c).step_by(3).collect();
                let n = pts.len() as f64;
                [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n]
            };
            let c: Vec<[f64; 2]> = (0..3).map(centroid).collect();
            let d = |a: usize, b: usize| ((c[a][0] - c[b][0]).powi(2) + (c[a][1] - c[b][1]).powi(2)).sqrt();
            let ds = [d(0, 1), d(1, 2), d(0, 2)];
            let mean = ds.iter().sum::<f64>() / 3.0;
            assert!(ds.iter().all(|x| (x - mean).abs() / mean < 0.05), "seed {seed}: {ds:?}");
        }
    }
}
