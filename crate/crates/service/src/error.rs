use std::path::Path;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use molscape_core::align::AlignError;
use molscape_core::chem::ChemError;
use molscape_core::dataset::DatasetError;
use molscape_core::dr::DrError;
use molscape_core::view::ViewError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Dr(#[from] DrError),
    #[error("{path}: {message}")]
    Artifact { path: String, message: String },
    #[error("missing artifacts:\n{}", .0.iter().map(|m| format!("  {m}")).collect::<Vec<_>>().join("\n"))]
    MissingArtifacts(Vec<String>),
}

impl PipelineError {
    pub fn io(path: &Path, e: std::io::Error) -> PipelineError {
        PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, body: ErrorBody { code, message: message.into(), offset: None } }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Envelope {
            error: ErrorBody,
        }
        (self.status, Json(Envelope { error: self.body })).into_response()
    }
}

impl From<ViewError> for ApiError {
    fn from(e: ViewError) -> ApiError {
        let code = match e {
            ViewError::InvalidRadius(_) => "invalid_radius",
            ViewError::NonFinite(_) => "non_finite",
            ViewError::Empty => "empty_selection",
            ViewError::UnknownFeature(_) => "unknown_feature",
            ViewError::UnknownCompounds(_) => "unknown_compounds",
            ViewError::Polygon(_) => "invalid_polygon",
            ViewError::Shape(_) => "shape",
        };
        ApiError::bad_request(code, e.to_string())
    }
}

impl From<ChemError> for ApiError {
    fn from(e: ChemError) -> ApiError {
        let mut err = ApiError::bad_request("chemistry", e.to_string());
        if let ChemError::Smiles(s) = &e {
            err.body.code = "smiles_parse";
            err.body.offset = Some(s.offset);
        }
        err
    }
}

impl From<AlignError> for ApiError {
    fn from(e: AlignError) -> ApiError {
        let code = match e {
            AlignError::TooFewCompounds(_) => "too_few_compounds",
            AlignError::EmptyGraph(_) => "empty_graph",
            AlignError::Conformer { .. } => "conformer",
            _ => "alignment",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<DrError> for ApiError {
    fn from(e: DrError) -> ApiError {
        match e {
            DrError::UnknownRepresentation(_) => ApiError::bad_request("unknown_representation", e.to_string()),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "projection", e.to_string()),
        }
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> ApiError {
        let code = match e {
            DatasetError::UnknownDataset(_) => "unknown_dataset",
            DatasetError::Version { .. } => "version_mismatch",
            DatasetError::DanglingSelection { .. } => "unknown_compounds",
            _ => "dataset",
        };
        ApiError::bad_request(code, e.to_string())
    }
}
