//! JSON API over one live session.
//!
//! State changes go through a single mutex. Retraining runs on the blocking
//! pool without holding it; meanwhile `/api/next` answers 503 with
//! `Retry-After` so the annotation UI can poll.

use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Json, State};
use axum::http::header::{CONTENT_TYPE, RETRY_AFTER};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use lexloop_core::engine::{open_session, IterationReport, SessionRecord, Task, TrainJob};
use lexloop_core::{Error, Label, Session, Status};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

#[derive(Clone)]
pub struct AppState {
    session_id: Arc<str>,
    session: Arc<Mutex<Option<Session>>>,
}

impl AppState {
    pub fn new(session_id: impl Into<String>, session: Session) -> Self {
        Self {
            session_id: session_id.into().into(),
            session: Arc::new(Mutex::new(Some(session))),
        }
    }

    /// A server with nothing loaded; every endpoint answers 404.
    pub fn empty() -> Self {
        Self {
            session_id: "".into(),
            session: Arc::new(Mutex::new(None)),
        }
    }

    /// Resumes the session stored in `dir`.
    pub fn open(dir: &Path) -> anyhow::Result<Self> {
        let (session, summary) = open_session(dir)?;
        log::info!("replayed {} annotations from {}", summary.replayed, dir.display());
        if let Some((line, why)) = summary.stopped_at {
            log::warn!("log replay stopped at line {line}: {why}");
        }
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Ok(Self::new(id, session))
    }

    fn lock(&self) -> MutexGuard<'_, Option<Session>> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn spawn_training(&self, job: TrainJob) {
        let state = self.clone();
        let run = move || {
            let iteration = job.iteration + 1;
            let outcome = job.run().unwrap_or_else(|e| {
                log::error!("iteration {iteration}: training failed: {e}");
                None
            });
            let mut guard = state.lock();
            if let Some(session) = guard.as_mut() {
                match session.install(outcome) {
                    Ok(report) => log::info!("iteration {} retrained (trained: {})", report.iteration, report.trained),
                    Err(e) => log::error!("iteration {iteration}: {e}"),
                }
            }
        };
        match tokio::runtime::Handle::try_current() {
            Ok(handle) => {
                handle.spawn_blocking(run);
            }
            Err(_) => run(),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn no_session() -> Self {
        Self::new(StatusCode::NOT_FOUND, "no active session")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::BadState("training") => StatusCode::SERVICE_UNAVAILABLE,
            Error::BadState(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(serde_json::json!({ "error": self.message }));
        let mut resp = (self.status, body).into_response();
        if self.status == StatusCode::SERVICE_UNAVAILABLE {
            resp.headers_mut().insert(RETRY_AFTER, HeaderValue::from_static("1"));
        }
        resp
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Progress {
    pub pos_filled: usize,
    pub pos_quota: usize,
    pub neg_filled: usize,
    pub neg_quota: usize,
    pub annotations: usize,
    pub max_annotations: usize,
}

fn progress(s: &Session) -> Progress {
    let st = s.state();
    let cfg = s.config();
    Progress {
        pos_filled: st.current_pos.len(),
        pos_quota: cfg.pos_quota,
        neg_filled: st.current_neg.len(),
        neg_quota: cfg.neg_quota,
        annotations: st.annotations,
        max_annotations: cfg.max_annotations,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SessionView {
    pub session_id: String,
    pub status: Status,
    pub strategy: String,
    pub iteration: usize,
    pub iterations: usize,
    pub completed_iterations: usize,
    pub progress: Progress,
    pub labeled: usize,
    pub unlabeled: usize,
    pub annotations_total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct AnnotationTask {
    pub word: String,
    pub glosses: Vec<String>,
    pub iteration: usize,
    pub strategy: String,
    pub progress: Progress,
    pub session_id: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LabelRequest {
    pub word: String,
    pub label: String,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub annotator: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LabelAck {
    pub word: String,
    pub label: Label,
    pub iteration: usize,
    pub counted: bool,
    pub iteration_complete: bool,
    pub status: Status,
}

async fn session_view(State(app): State<AppState>) -> ApiResult<SessionView> {
    let guard = app.lock();
    let s = guard.as_ref().ok_or_else(ApiError::no_session)?;
    let st = s.state();
    Ok(Json(SessionView {
        session_id: app.session_id.to_string(),
        status: s.status(),
        strategy: s.config().strategy.name().to_string(),
        iteration: s.current_iteration().min(s.config().iterations),
        iterations: s.config().iterations,
        completed_iterations: s.reports().len(),
        progress: progress(s),
        labeled: st.labeled.len(),
        unlabeled: st.unlabeled.len(),
        annotations_total: st.archive.len(),
    }))
}

async fn next_task(State(app): State<AppState>) -> Result<Response, ApiError> {
    let mut guard = app.lock();
    let s = guard.as_mut().ok_or_else(ApiError::no_session)?;
    let task: Option<Task> = s.next_candidate()?;
    Ok(match task {
        Some(t) => Json(AnnotationTask {
            word: t.word,
            glosses: t.glosses,
            iteration: t.iteration,
            strategy: t.strategy,
            progress: progress(s),
            session_id: app.session_id.to_string(),
        })
        .into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn post_label(State(app): State<AppState>, Json(req): Json<LabelRequest>) -> ApiResult<LabelAck> {
    let label: Label = req
        .label
        .parse()
        .map_err(|e: lexloop_core::label::UnknownLabel| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let (ack, job) = {
        let mut guard = app.lock();
        let s = guard.as_mut().ok_or_else(ApiError::no_session)?;
        let annotator = req.annotator.as_deref().unwrap_or("annotator");
        // the record is on disk once submit returns
        let out = s.submit(&req.word, label, annotator, req.note)?;
        let job = if out.iteration_complete { Some(s.training_job()?) } else { None };
        let ack = LabelAck {
            word: out.record.word,
            label,
            iteration: out.record.iteration,
            counted: out.record.counted,
            iteration_complete: out.iteration_complete,
            status: s.status(),
        };
        (ack, job)
    };
    if let Some(job) = job {
        app.spawn_training(job);
    }
    Ok(Json(ack))
}

async fn metrics(State(app): State<AppState>) -> ApiResult<Vec<IterationReport>> {
    let guard = app.lock();
    let s = guard.as_ref().ok_or_else(ApiError::no_session)?;
    Ok(Json(s.reports().to_vec()))
}

async fn export(State(app): State<AppState>) -> ApiResult<Vec<SessionRecord>> {
    let guard = app.lock();
    let s = guard.as_ref().ok_or_else(ApiError::no_session)?;
    Ok(Json(s.state().archive.clone()))
}

pub fn cors(origin: Option<&str>) -> anyhow::Result<CorsLayer> {
    let allow = match origin {
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o)?),
        None => AllowOrigin::any(),
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([CONTENT_TYPE]))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/session", get(session_view))
        .route("/api/next", get(next_task))
        .route("/api/label", post(post_label))
        .route("/api/metrics", get(metrics))
        .route("/api/export", get(export))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: std::net::SocketAddr, cors_origin: Option<&str>) -> anyhow::Result<()> {
    let app = router(state).layer(cors(cors_origin)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
