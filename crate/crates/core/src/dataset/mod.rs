//! Dataset manifests, activity labels, descriptor preprocessing and sessions.

mod activity;
mod external;
mod load;
mod preprocess;
mod session;

use std::path::Path;

use thiserror::Error;

pub use activity::{label_activity, ActivityClass};
pub use external::{fetch_external_features, ExternalFeatures, ExternalUpdate, FeatureService, FEATURE_SERVICE_ENV};
pub use load::{
    activity_feature, load_dataset, Compound, Dataset, DescriptorModel, FingerprintSettings, Manifest, TargetColumn,
    ACIDIC_PKA, BASIC_PKA, LOGP, MANIFEST_VERSION, QED,
};
pub use preprocess::{preprocess_descriptors, DescriptorColumn, PreprocessReport, MAX_NAN_FRACTION};
pub use session::{load_session, save_session, AddedCompound, SessionState, ViewConfig, SESSION_VERSION};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("{what} version mismatch: expected {expected}, found {found}")]
    Version { what: &'static str, expected: u32, found: u32 },
    #[error("duplicate compound ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("{file} is not aligned with the compound table: {}", .offenders.join(", "))]
    Misaligned { file: String, offenders: Vec<String> },
    #[error("compound `{id}`: {message}")]
    Compound { id: String, message: String },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("session selection `{selection}` references unknown compounds: {}", .ids.join(", "))]
    DanglingSelection { selection: String, ids: Vec<String> },
    #[error(transparent)]
    Dr(#[from] crate::dr::DrError),
    #[error(transparent)]
    Align(#[from] crate::align::AlignError),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> DatasetError {
        DatasetError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
