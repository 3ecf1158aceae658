use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};
use crate::chem::{DescriptorVector, DrugLikenessRecord};
use crate::dr::{ProjectionSource, Representation};
use crate::view::Selection;

pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewConfig {
    pub representations: Vec<Representation>,
    pub source: ProjectionSource,
    /// `None` uses the grid's default radius.
    pub hex_radius: Option<f64>,
    pub color_feature: Option<String>,
}

impl Default for ViewConfig {
    fn default() -> Self {
        ViewConfig {
            representations: vec![Representation::Ecfp, Representation::Path],
            source: ProjectionSource::Tsne,
            hex_radius: None,
            color_feature: None,
        }
    }
}

/// A compound entered by the analyst. It lives in the session only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddedCompound {
    pub id: String,
    pub smiles: String,
    /// Set bits per fingerprint representation.
    pub fingerprints: BTreeMap<Representation, Vec<usize>>,
    pub descriptors: DescriptorVector,
    pub druglikeness: DrugLikenessRecord,
    /// `None` marks a representation without a trained projector.
    pub coordinates: BTreeMap<Representation, Option<[f64; 2]>>,
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub version: u32,
    pub dataset: String,
    #[serde(default)]
    pub selections: Vec<Selection>,
    #[serde(default)]
    pub view: ViewConfig,
    #[serde(default)]
    pub added: Vec<AddedCompound>,
}

impl SessionState {
    pub fn new(dataset: impl Into<String>) -> SessionState {
        SessionState {
            version: SESSION_VERSION,
            dataset: dataset.into(),
            selections: Vec::new(),
            view: ViewConfig::default(),
            added: Vec::new(),
        }
    }

    /// Checks that every selection resolves against `dataset` or the added compounds.
    pub fn validate(&self, dataset: &Dataset) -> Result<(), DatasetError> {
        if dataset.name != self.dataset {
            return Err(DatasetError::UnknownDataset(self.dataset.clone()));
        }
        let known: BTreeSet<&str> =
            dataset.compounds.iter().map(|c| c.id.as_str()).chain(self.added.iter().map(|a| a.id.as_str())).collect();
        for (k, s) in self.selections.iter().enumerate() {
            let missing: Vec<String> =
                s.ids.iter().filter(|id| !known.contains(id.as_str())).take(10).cloned().collect();
            if !missing.is_empty() {
                let selection = s.name.clone().unwrap_or_else(|| format!("#{k}"));
                return Err(DatasetError::DanglingSelection { selection, ids: missing });
            }
        }
        Ok(())
    }
}

pub fn save_session(path: &Path, state: &SessionState) -> Result<(), DatasetError> {
    let text = serde_json::to_string_pretty(state).map_err(|e| DatasetError::Format(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| DatasetError::io(path, e))
}

/// Reads a session and resolves it against the loaded datasets.
pub fn load_session(path: &Path, datasets: &[&Dataset]) -> Result<SessionState, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?;
    let found = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != SESSION_VERSION {
        return Err(DatasetError::Version { what: "session", expected: SESSION_VERSION, found });
    }
    let state: SessionState =
        serde_json::from_value(value).map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?;
    let dataset = datasets
        .iter()
        .find(|d| d.name == state.dataset)
        .ok_or_else(|| DatasetError::UnknownDataset(state.dataset.clone()))?;
    state.validate(dataset)?;
    Ok(state)
}
