//! Versioned JSON files written by the offline pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use molscape_core::dataset::{ActivityClass, DescriptorModel};
use molscape_core::dr::{
    ParametricProjector, Projection2D, ProjectorConfig, Representation, TrainingReport, TrustScores, TsneConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessArtifact {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub compounds: usize,
    /// `[rows, columns]` per representation.
    pub shapes: BTreeMap<Representation, [usize; 2]>,
    pub class_counts: BTreeMap<String, BTreeMap<ActivityClass, usize>>,
    pub conformers: usize,
    pub descriptor_model: DescriptorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneArtifact {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub representation: Representation,
    pub config: TsneConfig,
    pub initial_kl: f64,
    pub final_kl: f64,
    pub epochs: usize,
    pub projection: Projection2D,
    pub trust: TrustScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorArtifact {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub representation: Representation,
    pub config: ProjectorConfig,
    pub report: TrainingReport,
    pub model: ParametricProjector,
    /// The training compounds mapped by `model`.
    pub projection: Projection2D,
    pub trust: TrustScores,
}

pub const PREPROCESS_FORMAT: &str = "molscape.preprocess";
pub const TSNE_FORMAT: &str = "molscape.tsne";
pub const PROJECTOR_ARTIFACT_FORMAT: &str = "molscape.projector-artifact";

pub fn preprocess_path(dir: &Path) -> PathBuf {
    dir.join("preprocess.json")
}

pub fn tsne_path(dir: &Path, repr: Representation) -> PathBuf {
    dir.join(format!("tsne-{}.json", repr.as_str()))
}

pub fn projector_path(dir: &Path, repr: Representation) -> PathBuf {
    dir.join(format!("projector-{}.json", repr.as_str()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Artifact { path: path.display().to_string(), message: e.to_string() })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Reads an artifact and checks its `format` and `version` fields.
pub fn read_json<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T, PipelineError> {
    let bad = |message: String| PipelineError::Artifact { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if value.get("format").and_then(|v| v.as_str()) != Some(format) {
        return Err(bad(format!("not a {format} document")));
    }
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != ARTIFACT_VERSION as u64 {
        return Err(bad(format!("version mismatch: expected {ARTIFACT_VERSION}, found {version}")));
    }
    serde_json::from_value(value).map_err(|e| bad(e.to_string()))
}
