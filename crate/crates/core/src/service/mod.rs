//! JSON-over-HTTP facade for the network: inspection, stateless inference, Markov blankets,
//! metric extraction and evidence sessions for analytic and exploratory what-if work.
//!
//! | method | path | purpose |
//! |--------|------|---------|
//! | GET | `/network[?cpts=true]` | variables, states, edges (and CPTs) |
//! | POST | `/infer` | `{evidence, targets}` → [`PropagationResponse`] |
//! | GET | `/markov-blanket/{var}[?session=id]` | blanket plus project values |
//! | POST | `/metrics/extract[?session=id]` | `{files: {name: text}}` or `{path: dir}` → [`EvidenceReport`] |
//! | POST | `/sessions` | `{mode, target}` → [`Session`] |
//! | GET, DELETE | `/sessions/{id}` | read or drop a session |
//! | PATCH | `/sessions/{id}/evidence` | `{var: state}` merges, `{var: null}` clears |
//! | POST | `/sessions/{id}/propagate` | optional `{targets}` → [`PropagationResponse`] |
//! | GET, POST | `/sessions/{id}/evidence.xml` | export or replace evidence as XML |
//!
//! Errors use the body `{code, message, detail}`: 400 for malformed input or illegal states,
//! 404 for unknown sessions or variables in the path, 409 for evidence outside the
//! exploratory blanket, 422 for zero-probability evidence or semantically invalid datasets.

mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::future::Future;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bn::{posterior, BayesianNetwork, BnError, Cpt, Evidence, Posterior, Variable};
use crate::interchange::{evidence_from_xml, evidence_to_xml, XmlError};
use crate::metrics::{DatasetFiles, EvidenceReport, MetricsError};
use crate::model::DEGREE_OF_REVISION;

pub use session::{Mode, Session, SessionStore};

/// Result of propagating evidence. `revision` and `prediction` are always present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationResponse {
    pub evidence: Evidence,
    pub posteriors: BTreeMap<String, Posterior>,
    pub revision: Posterior,
    /// Most probable state of the revision variable, earliest declared state on ties.
    pub prediction: String,
}

/// Posteriors of `targets` and of the revision variable under `evidence`.
pub fn propagate(
    net: &BayesianNetwork,
    evidence: &Evidence,
    targets: &[String],
) -> Result<PropagationResponse, BnError> {
    evidence.validate(net)?;
    let revision = posterior(net, evidence, DEGREE_OF_REVISION)?;
    let mut posteriors = BTreeMap::new();
    for t in targets {
        if !posteriors.contains_key(t) {
            posteriors.insert(t.clone(), posterior(net, evidence, t)?);
        }
    }
    Ok(PropagationResponse {
        evidence: evidence.clone(),
        prediction: revision.argmax().to_string(),
        posteriors,
        revision,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

impl From<BnError> for ApiError {
    fn from(e: BnError) -> Self {
        let status = match e {
            BnError::InconsistentEvidence => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        let detail = match &e {
            BnError::IllegalState { variable, state } => json!({ "variable": variable, "state": state }),
            BnError::UnknownVariable(v) => json!({ "variable": v }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "MalformedRequest", e.body_text())
    }
}

impl From<XmlError> for ApiError {
    fn from(e: XmlError) -> Self {
        match e {
            XmlError::Evidence(inner) => inner.into(),
            other => ApiError::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        let status = if e.is_syntax() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::UNPROCESSABLE_ENTITY
        };
        let (code, detail) = match &e {
            MetricsError::Parse { file, line, column, .. } => {
                ("DatasetParse", json!({ "file": file, "line": line, "column": column }))
            }
            MetricsError::Invalid { file, line, column, .. } => {
                ("DatasetInvalid", json!({ "file": file, "line": line, "column": column }))
            }
            MetricsError::MissingFile(f) => ("DatasetMissingFile", json!({ "file": f })),
            MetricsError::Io { file, .. } => ("DatasetUnreadable", json!({ "file": file })),
            _ => ("DatasetInvalid", Value::Null),
        };
        ApiError::new(status, code, e.to_string()).with_detail(detail)
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// State shared by all handlers. The network is read-only.
#[derive(Debug)]
pub struct AppState {
    net: Arc<BayesianNetwork>,
    sessions: SessionStore,
    project: RwLock<Option<EvidenceReport>>,
    snapshot: Option<PathBuf>,
}

impl AppState {
    /// Fails unless the network has the revision variable.
    pub fn new(net: Arc<BayesianNetwork>) -> Result<Self, BnError> {
        net.variable(DEGREE_OF_REVISION)?;
        Ok(AppState {
            net,
            sessions: SessionStore::default(),
            project: RwLock::new(None),
            snapshot: None,
        })
    }

    /// Restores sessions from `path` if it exists and saves them there on shutdown.
    pub fn with_snapshot(mut self, path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        let sessions = SessionStore::load(&path)?;
        for s in sessions.snapshot() {
            s.evidence.validate(&self.net).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("session {}: {e}", s.id))
            })?;
        }
        self.sessions = sessions;
        self.snapshot = Some(path);
        Ok(self)
    }

    pub fn network(&self) -> &BayesianNetwork {
        &self.net
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    pub fn save_snapshot(&self) -> std::io::Result<()> {
        match &self.snapshot {
            Some(path) => self.sessions.save(path),
            None => Ok(()),
        }
    }

    fn session(&self, id: &str) -> ApiResult<Arc<std::sync::Mutex<Session>>> {
        self.sessions.get(id).ok_or_else(|| ApiError::unknown_session(id))
    }

    fn project_values(&self, session: Option<&str>) -> ApiResult<Option<EvidenceReport>> {
        match session {
            Some(id) => Ok(self.session(id)?.lock().expect("session lock").project_values.clone()),
            None => Ok(self.project.read().expect("project lock").clone()),
        }
    }
}

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/network", get(get_network))
        .route("/infer", post(infer))
        .route("/markov-blanket/{var}", get(get_blanket))
        .route("/metrics/extract", post(extract_metrics))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/evidence", axum::routing::patch(patch_evidence))
        .route("/sessions/{id}/propagate", post(propagate_session))
        .route("/sessions/{id}/evidence.xml", get(export_xml).post(import_xml))
        .with_state(state)
}

/// Serves `state` on `listener` until `shutdown` resolves, then writes the session snapshot.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: SharedState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    state.save_snapshot()
}

#[derive(Debug, Deserialize)]
struct NetworkQuery {
    #[serde(default)]
    cpts: bool,
}

#[derive(Debug, Serialize)]
struct NetworkView<'a> {
    class_variable: &'static str,
    variables: &'a [Variable],
    edges: &'a [(String, String)],
    #[serde(skip_serializing_if = "Option::is_none")]
    cpts: Option<Vec<Cpt>>,
}

async fn get_network(State(state): State<SharedState>, Query(q): Query<NetworkQuery>) -> Response {
    let net = state.network();
    Json(NetworkView {
        class_variable: DEGREE_OF_REVISION,
        variables: net.variables(),
        edges: net.edges(),
        cpts: q.cpts.then(|| net.cpts()),
    })
    .into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InferRequest {
    #[serde(default)]
    evidence: Evidence,
    #[serde(default)]
    targets: Vec<String>,
}

async fn infer(
    State(state): State<SharedState>,
    body: Result<Json<InferRequest>, JsonRejection>,
) -> ApiResult<Json<PropagationResponse>> {
    let Json(req) = body?;
    Ok(Json(propagate(state.network(), &req.evidence, &req.targets)?))
}

#[derive(Debug, Deserialize)]
struct SessionQuery {
    session: Option<String>,
}

async fn get_blanket(
    State(state): State<SharedState>,
    Path(var): Path<String>,
    Query(q): Query<SessionQuery>,
) -> ApiResult<Json<Value>> {
    let blanket = state.network().markov_blanket(&var).map_err(|e| match e {
        BnError::UnknownVariable(_) => {
            ApiError::new(StatusCode::NOT_FOUND, e.code(), e.to_string()).with_detail(json!({ "variable": var }))
        }
        other => other.into(),
    })?;
    let mut body = json!({ "variable": var, "blanket": blanket });
    if let Some(report) = state.project_values(q.session.as_deref())? {
        let values: BTreeMap<&str, String> = blanket
            .iter()
            .filter_map(|v| report.value(v).map(|value| (v.as_str(), value.to_string())))
            .collect();
        body["project_values"] = json!(values);
    }
    Ok(Json(body))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRequest {
    files: Option<DatasetFiles>,
    path: Option<String>,
}

async fn extract_metrics(
    State(state): State<SharedState>,
    Query(q): Query<SessionQuery>,
    body: Result<Json<ExtractRequest>, JsonRejection>,
) -> ApiResult<Json<EvidenceReport>> {
    let Json(req) = body?;
    let files = match (req.files, req.path) {
        (Some(files), None) => files,
        (None, Some(path)) => DatasetFiles::read_dir(FsPath::new(&path))?,
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "MalformedRequest",
                "provide exactly one of `files` or `path`",
            ))
        }
    };
    let report = files.parse()?.extract()?;
    match q.session {
        Some(id) => state.session(&id)?.lock().expect("session lock").project_values = Some(report.clone()),
        None => *state.project.write().expect("project lock") = Some(report.clone()),
    }
    tracing::info!(entries = report.entries.len(), "extracted project evidence");
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default = "default_mode")]
    mode: Mode,
    target: Option<String>,
}

fn default_mode() -> Mode {
    Mode::Analytic
}

async fn create_session(
    State(state): State<SharedState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Session>)> {
    let Json(req) = body?;
    let net = state.network();
    let blanket = match (&req.target, req.mode) {
        (None, Mode::Exploratory) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "MissingTarget",
                "exploratory sessions need a target variable",
            ))
        }
        (Some(t), Mode::Exploratory) => Some(net.markov_blanket(t)?),
        (Some(t), Mode::Analytic) => {
            net.variable(t)?;
            None
        }
        (None, Mode::Analytic) => None,
    };
    let session = Session {
        id: uuid::Uuid::new_v4().simple().to_string(),
        mode: req.mode,
        target: req.target,
        evidence: Evidence::new(),
        project_values: state.project.read().expect("project lock").clone(),
        blanket,
    };
    state.sessions.insert(session.clone());
    tracing::info!(id = %session.id, mode = ?session.mode, "session created");
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let session = state.session(&id)?;
    let s = session.lock().expect("session lock").clone();
    Ok(Json(s))
}

async fn delete_session(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    if state.sessions.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::unknown_session(&id))
    }
}

/// Rejects evidence variables outside an exploratory session's blanket.
fn check_blanket<'a>(session: &Session, variables: impl IntoIterator<Item = &'a str>) -> ApiResult<()> {
    let Some(blanket) = &session.blanket else { return Ok(()) };
    let outside: BTreeSet<&str> = variables.into_iter().filter(|v| !blanket.contains(*v)).collect();
    if outside.is_empty() {
        return Ok(());
    }
    Err(ApiError::new(
        StatusCode::CONFLICT,
        "OutsideBlanket",
        format!(
            "exploratory target `{}` only accepts evidence on its Markov blanket",
            session.target.as_deref().unwrap_or_default()
        ),
    )
    .with_detail(json!({ "variables": outside, "blanket": blanket })))
}

async fn patch_evidence(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: Result<Json<BTreeMap<String, Option<String>>>, JsonRejection>,
) -> ApiResult<Json<Session>> {
    let Json(changes) = body?;
    let session = state.session(&id)?;
    let mut s = session.lock().expect("session lock");
    let mut evidence = s.evidence.clone();
    for (var, state_label) in &changes {
        match state_label {
            Some(label) => {
                evidence.insert(var.clone(), label.clone());
            }
            None => {
                state.network().variable(var)?;
                evidence.remove(var);
            }
        }
    }
    evidence.validate(state.network())?;
    check_blanket(
        &s,
        changes.iter().filter(|(_, v)| v.is_some()).map(|(k, _)| k.as_str()),
    )?;
    s.evidence = evidence;
    Ok(Json(s.clone()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropagateRequest {
    targets: Option<Vec<String>>,
}

/// Default targets: every variable in analytic mode; the target and its blanket otherwise.
fn session_targets(net: &BayesianNetwork, session: &Session) -> Vec<String> {
    match (&session.blanket, &session.target) {
        (Some(blanket), Some(target)) => std::iter::once(target.clone()).chain(blanket.iter().cloned()).collect(),
        _ => net.variables().iter().map(|v| v.id.clone()).collect(),
    }
}

async fn propagate_session(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PropagationResponse>> {
    let req: PropagateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        PropagateRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MalformedRequest", e.to_string()))?
    };
    let session = state.session(&id)?;
    let s = session.lock().expect("session lock").clone();
    let targets = req.targets.unwrap_or_else(|| session_targets(state.network(), &s));
    Ok(Json(propagate(state.network(), &s.evidence, &targets)?))
}

async fn export_xml(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let evidence = session.lock().expect("session lock").evidence.clone();
    let xml = evidence_to_xml(&evidence)?;
    Ok(([(header::CONTENT_TYPE, "application/xml")], xml).into_response())
}

async fn import_xml(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<Session>> {
    let session = state.session(&id)?;
    let evidence = evidence_from_xml(&body, state.network())?;
    let mut s = session.lock().expect("session lock");
    check_blanket(&s, evidence.variables())?;
    s.evidence = evidence;
    Ok(Json(s.clone()))
}
