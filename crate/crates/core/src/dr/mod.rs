//! Dimensionality reduction: t-SNE layouts, parametric projectors, and
//! per-compound trust scores.

mod distance;
mod matrix;
mod projector;
mod trust;
mod tsne;

use thiserror::Error;

pub use distance::{
    pairwise_cosine_distances, pairwise_euclidean_distances, projection_distances, DistanceMatrix, Metric,
};
pub use matrix::{EmbeddingMatrix, Projection2D, ProjectionSource, Representation};
pub use projector::{
    train_projector, Activation, DenseLayer, LayerGradient, ParametricProjector, ProjectorConfig, TrainingReport,
    PROJECTOR_FORMAT, PROJECTOR_VERSION,
};
pub use trust::{
    compute_trust_scores, kendall_tau_a, kendall_trust, pearson, pearson_trust, trust_from_distances, KendallTies,
    TrustConfig, TrustKind, TrustScores,
};
pub use tsne::{
    fit_tsne, input_dissimilarities, joint_probabilities, kl_divergence, kl_gradient, row_affinities, TsneConfig,
    TsneFit, MAX_BANDWIDTH_STEPS, PERPLEXITY_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum DrError {
    #[error("unknown representation `{0}`")]
    UnknownRepresentation(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value for `{0}`")]
    NonFinite(String),
    #[error("all-zero row for `{0}` has no cosine distance")]
    ZeroRow(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bandwidth search for `{id}` did not converge within {steps} steps")]
    BandwidthSearch { id: String, steps: usize },
    #[error("optimization diverged; last finite objective {last_finite}")]
    Diverged { last_finite: f64 },
    #[error("input width {got} does not match projector width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("projector document: {0}")]
    Document(String),
}
