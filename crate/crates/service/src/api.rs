//! HTTP routes under `/v1`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use molscape_core::dataset::{save_session, AddedCompound, SessionState, ViewConfig};
use molscape_core::dr::{ProjectionSource, Representation, TrustKind};
use molscape_core::view::Selection;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, Semaphore};

use crate::engine::{
    AlignmentView, BinsView, DatasetSummary, DifferenceView, Engine, ProjectionView, SelectionRequest,
};
use crate::error::ApiError;
use crate::table::{TablePage, TableQuery};

type Session = Arc<Mutex<SessionState>>;

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    sessions: Arc<std::sync::Mutex<BTreeMap<String, Session>>>,
    next_session: Arc<AtomicU64>,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(engine: Engine) -> AppState {
        let workers = engine.config.service.workers.max(1);
        AppState {
            engine: Arc::new(engine),
            sessions: Arc::default(),
            next_session: Arc::new(AtomicU64::new(1)),
            workers: Arc::new(Semaphore::new(workers)),
        }
    }

    fn session(&self, id: &str) -> Result<Session, ApiError> {
        self.sessions
            .lock()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_session", format!("unknown session `{id}`")))
    }

    fn open(&self, state: SessionState) -> String {
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        self.sessions.lock().expect("session map").insert(id.clone(), Arc::new(Mutex::new(state)));
        id
    }

    /// Runs `f` on the bounded worker pool under a deadline.
    async fn run_blocking<T, F>(&self, timeout: Duration, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Engine) -> Result<T, ApiError> + Send + 'static,
    {
        let permit = self.workers.clone().acquire_owned().await.expect("worker pool open");
        let engine = self.engine.clone();
        let task = tokio::task::spawn_blocking(move || {
            let _permit = permit;
            f(&engine)
        });
        match tokio::time::timeout(timeout, task).await {
            Ok(Ok(result)) => result,
            Ok(Err(e)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "worker", e.to_string())),
            Err(_) => Err(ApiError::new(
                StatusCode::GATEWAY_TIMEOUT,
                "timeout",
                format!("no result within {} ms", timeout.as_millis()),
            )),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/datasets", get(datasets))
        .route("/v1/projection/{repr}", get(projection))
        .route("/v1/bins/{repr}", get(bins))
        .route("/v1/difference", get(difference))
        .route("/v1/table", get(table))
        .route("/v1/align", post(align))
        .route("/v1/export/sdf", get(export_sdf))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/view", put(set_view))
        .route("/v1/sessions/{id}/selections", get(list_selections).post(add_selection))
        .route("/v1/sessions/{id}/compounds", post(add_compound))
        .route("/v1/sessions/{id}/save", post(save))
        .with_state(state)
}

fn parse_repr(s: &str) -> Result<Representation, ApiError> {
    Ok(s.parse::<Representation>()?)
}

fn split_ids(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

async fn datasets(State(state): State<AppState>) -> Json<Vec<DatasetSummary>> {
    Json(vec![state.engine.summary()])
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ProjectionParams {
    source: Option<ProjectionSource>,
    session: Option<String>,
}

async fn projection(
    State(state): State<AppState>,
    Path(repr): Path<String>,
    Query(q): Query<ProjectionParams>,
) -> Result<Json<ProjectionView>, ApiError> {
    let repr = parse_repr(&repr)?;
    let source = q.source.unwrap_or(ProjectionSource::Tsne);
    match q.session {
        Some(id) => {
            let session = state.session(&id)?;
            let guard = session.lock().await;
            Ok(Json(state.engine.projection_view(repr, source, Some(&guard))?))
        }
        None => Ok(Json(state.engine.projection_view(repr, source, None)?)),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct BinsParams {
    source: Option<ProjectionSource>,
    radius: Option<f64>,
    feature: Option<String>,
    trust: Option<TrustKind>,
}

async fn bins(
    State(state): State<AppState>,
    Path(repr): Path<String>,
    Query(q): Query<BinsParams>,
) -> Result<Json<BinsView>, ApiError> {
    let repr = parse_repr(&repr)?;
    Ok(Json(state.engine.bins(
        repr,
        q.source.unwrap_or(ProjectionSource::Tsne),
        q.radius,
        q.feature.as_deref(),
        q.trust.unwrap_or_default(),
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DifferenceParams {
    ref_repr: String,
    other_repr: String,
    source: Option<ProjectionSource>,
    radius: Option<f64>,
    /// Comma-separated compound ids.
    ids: Option<String>,
    session: Option<String>,
    /// Name of a stored selection of `session`.
    selection: Option<String>,
}

async fn difference(
    State(state): State<AppState>,
    Query(q): Query<DifferenceParams>,
) -> Result<Json<DifferenceView>, ApiError> {
    let selection = match (&q.ids, &q.session, &q.selection) {
        (Some(ids), _, _) => Selection::new(split_ids(ids), molscape_core::view::SelectionSource::Table),
        (None, Some(session), Some(name)) => {
            let session = state.session(session)?;
            let guard = session.lock().await;
            guard
                .selections
                .iter()
                .find(|s| s.name.as_deref() == Some(name))
                .cloned()
                .ok_or_else(|| ApiError::not_found("unknown_selection", format!("no selection named `{name}`")))?
        }
        _ => return Err(ApiError::bad_request("missing_selection", "pass `ids` or `session` and `selection`")),
    };
    Ok(Json(state.engine.difference(
        parse_repr(&q.ref_repr)?,
        parse_repr(&q.other_repr)?,
        q.source.unwrap_or(ProjectionSource::Tsne),
        &selection,
        q.radius,
    )?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct TableParams {
    sort: Option<String>,
    desc: bool,
    filter: Option<String>,
    offset: usize,
    limit: Option<usize>,
    group_by: Option<String>,
    source: Option<ProjectionSource>,
    radius: Option<f64>,
}

async fn table(State(state): State<AppState>, Query(q): Query<TableParams>) -> Result<Json<TablePage>, ApiError> {
    let group = match &q.group_by {
        Some(r) => Some((parse_repr(r)?, q.source.unwrap_or(ProjectionSource::Tsne), q.radius)),
        None => None,
    };
    let query = TableQuery { sort: q.sort, desc: q.desc, filter: q.filter, offset: q.offset, limit: q.limit };
    Ok(Json(state.engine.table(&query, group)?))
}

#[derive(Debug, Deserialize)]
struct AlignRequest {
    ids: Vec<String>,
}

async fn align(State(state): State<AppState>, Json(req): Json<AlignRequest>) -> Result<Json<AlignmentView>, ApiError> {
    let timeout = state.engine.config.align_timeout();
    Ok(Json(state.run_blocking(timeout, move |engine| engine.align(&req.ids)).await?))
}

#[derive(Debug, Deserialize)]
struct ExportParams {
    ids: String,
    #[serde(default)]
    aligned: bool,
}

async fn export_sdf(State(state): State<AppState>, Query(q): Query<ExportParams>) -> Result<Response, ApiError> {
    let timeout = state.engine.config.align_timeout();
    let ids = split_ids(&q.ids);
    let text = state.run_blocking(timeout, move |engine| engine.export_sdf(&ids, q.aligned)).await?;
    Ok(([(header::CONTENT_TYPE, "chemical/x-mdl-sdfile")], text).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct CreateSession {
    state: Option<SessionState>,
}

#[derive(Debug, Serialize)]
struct SessionReply {
    id: String,
    state: SessionState,
}

async fn create_session(
    State(state): State<AppState>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionReply>), ApiError> {
    let session = match body.and_then(|Json(b)| b.state) {
        Some(s) => {
            if s.version != molscape_core::dataset::SESSION_VERSION {
                return Err(molscape_core::dataset::DatasetError::Version {
                    what: "session",
                    expected: molscape_core::dataset::SESSION_VERSION,
                    found: s.version,
                }
                .into());
            }
            s.validate(&state.engine.dataset)?;
            s
        }
        None => SessionState::new(state.engine.dataset.name.clone()),
    };
    let id = state.open(session.clone());
    Ok((StatusCode::CREATED, Json(SessionReply { id, state: session })))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    let session = state.session(&id)?;
    let guard = session.lock().await;
    Ok(Json(guard.clone()))
}

async fn set_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(view): Json<ViewConfig>,
) -> Result<Json<ViewConfig>, ApiError> {
    for &r in &view.representations {
        if !state.engine.views.contains_key(&r) {
            return Err(ApiError::bad_request("unknown_representation", format!("no `{r}` representation")));
        }
    }
    if let Some(f) = &view.color_feature {
        if state.engine.features.get(f).is_none() {
            return Err(ApiError::bad_request("unknown_feature", format!("unknown feature `{f}`")));
        }
    }
    let session = state.session(&id)?;
    session.lock().await.view = view.clone();
    Ok(Json(view))
}

async fn list_selections(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Vec<Selection>>, ApiError> {
    let session = state.session(&id)?;
    let guard = session.lock().await;
    Ok(Json(guard.selections.clone()))
}

async fn add_selection(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SelectionRequest>,
) -> Result<Json<Selection>, ApiError> {
    let session = state.session(&id)?;
    let mut fresh = state.engine.select(&req)?;
    let mut guard = session.lock().await;
    let existing = req.name.as_ref().and_then(|n| guard.selections.iter().position(|s| s.name.as_ref() == Some(n)));
    if let Some(k) = existing {
        use crate::engine::Combine;
        let old = &guard.selections[k];
        fresh = match req.combine {
            Combine::Replace => fresh,
            Combine::Union => old.union(&fresh),
            Combine::Intersection => old.intersection(&fresh),
        };
        fresh.name = req.name.clone();
        guard.selections[k] = fresh.clone();
    } else {
        guard.selections.push(fresh.clone());
    }
    Ok(Json(fresh))
}

#[derive(Debug, Deserialize)]
struct AddCompound {
    smiles: String,
}

async fn add_compound(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AddCompound>,
) -> Result<(StatusCode, Json<AddedCompound>), ApiError> {
    let session = state.session(&id)?;
    let mut guard = session.lock().await;
    let new_id = format!("added-{}", guard.added.len() + 1);
    let timeout = state.engine.config.add_timeout();
    let added = state.run_blocking(timeout, move |engine| engine.featurize_compound(new_id, &req.smiles)).await?;
    guard.added.push(added.clone());
    Ok((StatusCode::CREATED, Json(added)))
}

#[derive(Debug, Deserialize)]
struct SaveRequest {
    name: String,
}

#[derive(Debug, Serialize)]
struct SaveReply {
    path: String,
}

/// Writes the session to `<artifacts>/sessions/<name>.json`.
async fn save(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SaveRequest>,
) -> Result<Json<SaveReply>, ApiError> {
    if req.name.is_empty() || !req.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(ApiError::bad_request("invalid_name", "session names use letters, digits, `-` and `_`"));
    }
    let session = state.session(&id)?;
    let snapshot = session.lock().await.clone();
    let dir = state.engine.artifacts_dir.join("sessions");
    std::fs::create_dir_all(&dir).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?;
    let path = dir.join(format!("{}.json", req.name));
    save_session(&path, &snapshot)?;
    Ok(Json(SaveReply { path: path.display().to_string() }))
}
