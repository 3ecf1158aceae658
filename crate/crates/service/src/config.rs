use std::path::Path;
use std::time::Duration;

use molscape_core::align::AlignConfig;
use molscape_core::dr::{Metric, ProjectorConfig, Representation, TrustConfig, TsneConfig};
use molscape_core::view::DifferenceConfig;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// Datasets at least this large take the large-dataset defaults.
pub const LARGE_DATASET: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Auto,
    Small,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneSettings {
    /// `None` picks 7.5 for small datasets and 45 for large ones.
    pub perplexity: Option<f64>,
    pub max_epochs: usize,
    pub epochs_without_progress: usize,
    pub metric: Metric,
}

impl Default for TsneSettings {
    fn default() -> Self {
        TsneSettings { perplexity: None, max_epochs: 10_000, epochs_without_progress: 1_000, metric: Metric::Euclidean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectorSettings {
    pub preset: Preset,
    pub max_epochs: Option<usize>,
}

impl Default for ProjectorSettings {
    fn default() -> Self {
        ProjectorSettings { preset: Preset::Auto, max_epochs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceSettings {
    pub workers: usize,
    pub align_timeout_ms: u64,
    pub add_timeout_ms: u64,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings { workers: 4, align_timeout_ms: 10_000, add_timeout_ms: 6_000 }
    }
}

/// Settings file passed with `--config`, in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub tsne: TsneSettings,
    pub projector: ProjectorSettings,
    pub trust: TrustConfig,
    pub align: AlignConfig,
    pub difference: DifferenceConfig,
    pub service: ServiceSettings,
}

impl PipelineConfig {
    pub fn read(path: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn tsne_config(&self, n: usize, seed: u64) -> TsneConfig {
        let perplexity = self.tsne.perplexity.unwrap_or(if n >= LARGE_DATASET { 45.0 } else { 7.5 });
        TsneConfig {
            max_epochs: self.tsne.max_epochs,
            epochs_without_progress: self.tsne.epochs_without_progress,
            metric: self.tsne.metric,
            seed,
            ..TsneConfig::with_perplexity(perplexity)
        }
    }

    pub fn projector_config(&self, repr: Representation, n: usize, seed: u64) -> ProjectorConfig {
        let large = match self.projector.preset {
            Preset::Auto => n >= LARGE_DATASET,
            Preset::Small => false,
            Preset::Large => true,
        };
        let mut config =
            if large { ProjectorConfig::large_dataset(repr) } else { ProjectorConfig::small_dataset(repr) };
        config.seed = seed;
        if let Some(m) = self.projector.max_epochs {
            config.max_epochs = m;
        }
        config
    }

    pub fn align_timeout(&self) -> Duration {
        Duration::from_millis(self.service.align_timeout_ms)
    }

    pub fn add_timeout(&self) -> Duration {
        Duration::from_millis(self.service.add_timeout_ms)
    }
}
