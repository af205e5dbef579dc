//! HTTP front end for blind evaluation campaigns.
//!
//! All state lives in one [`EvalStore`] behind a mutex, so score writes are
//! serialized and every read sees a consistent snapshot. When a data
//! directory is configured the full archive is rewritten atomically after
//! each mutation.

use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use corpusforge::evalkit::{
    export_eval_dataset, import_eval_dataset, ArchiveError, Diagnostics, EvalError, EvalItem, EvalStore, Granularity,
    NextItem, ReportCell, ScoreRecord, LIKERT_MAX,
};
use serde::{Deserialize, Serialize};

pub const ARCHIVE_FILE: &str = "eval.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error("{0}")]
    BadRequest(String),
    #[error("{status}: {message}")]
    Body { status: StatusCode, message: String },
    #[error("persisting archive: {0}")]
    Io(#[from] io::Error),
}

impl ServiceError {
    fn status(&self) -> StatusCode {
        match self {
            ServiceError::Eval(EvalError::InvalidLikert(_) | EvalError::BadPosition { .. }) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Eval(EvalError::UnknownSession(_) | EvalError::UnknownItem { .. }) => StatusCode::NOT_FOUND,
            ServiceError::Eval(EvalError::NoItems) => StatusCode::CONFLICT,
            ServiceError::Eval(_) | ServiceError::Archive(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Body { status, .. } => *status,
            ServiceError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let message = match &self {
            ServiceError::Body { message, .. } => message.clone(),
            other => other.to_string(),
        };
        (self.status(), Json(ErrorBody { error: message })).into_response()
    }
}

impl From<JsonRejection> for ServiceError {
    fn from(r: JsonRejection) -> Self {
        ServiceError::Body {
            status: r.status(),
            message: r.body_text(),
        }
    }
}

type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

pub struct EvalService {
    store: Mutex<EvalStore>,
    base_seed: u64,
    data_dir: Option<PathBuf>,
    clock: Clock,
}

fn unix_millis() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

impl EvalService {
    /// In-memory service; nothing is written to disk.
    pub fn new(store: EvalStore, base_seed: u64) -> Self {
        Self {
            store: Mutex::new(store),
            base_seed,
            data_dir: None,
            clock: Arc::new(unix_millis),
        }
    }

    /// Resume from `data_dir/eval.jsonl` if present. Otherwise start from
    /// `items` (possibly none, to be filled by an import).
    pub fn open(data_dir: &Path, base_seed: u64, items: Vec<EvalItem>) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(data_dir)?;
        let path = data_dir.join(ARCHIVE_FILE);
        let store = if path.exists() {
            let ds = import_eval_dataset(io::BufReader::new(std::fs::File::open(&path)?))?;
            EvalStore::from_dataset(ds, base_seed)?
        } else {
            EvalStore::new(items, base_seed)?
        };
        let service = Self {
            data_dir: Some(data_dir.to_path_buf()),
            ..Self::new(store, base_seed)
        };
        service.persist(&service.lock())?;
        Ok(service)
    }

    /// Replace the timestamp source used for score records.
    pub fn with_clock(mut self, clock: impl Fn() -> i64 + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    fn lock(&self) -> MutexGuard<'_, EvalStore> {
        // a panic while holding the lock cannot leave the store half-written:
        // every mutation is a single push/insert
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn export(&self) -> Vec<u8> {
        archive_bytes(&self.lock())
    }

    fn persist(&self, store: &EvalStore) -> Result<(), ServiceError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&archive_bytes(store))?;
        tmp.as_file().sync_all()?;
        tmp.persist(dir.join(ARCHIVE_FILE)).map_err(|e| e.error)?;
        Ok(())
    }
}

fn archive_bytes(store: &EvalStore) -> Vec<u8> {
    let mut buf = Vec::new();
    export_eval_dataset(&store.to_dataset(), &mut buf).expect("writing to memory");
    buf
}

pub fn router(service: Arc<EvalService>) -> Router {
    Router::new()
        .route("/api/session/{evaluator}/next", get(next_item))
        .route("/api/score", post(score))
        .route("/api/report", get(report))
        .route("/api/export", get(export))
        .route("/api/import", post(import))
        .with_state(service)
}

pub async fn serve(addr: SocketAddr, service: Arc<EvalService>) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}

async fn next_item(
    State(svc): State<Arc<EvalService>>,
    UrlPath(evaluator): UrlPath<String>,
) -> Result<Json<NextItem>, ServiceError> {
    let evaluator = evaluator.trim();
    if evaluator.is_empty() {
        return Err(ServiceError::BadRequest("evaluator id is empty".into()));
    }
    let mut store = svc.lock();
    let had_session = store.sessions().iter().any(|s| s.evaluator_id == evaluator);
    let next = store.next_item(evaluator)?;
    if !had_session {
        svc.persist(&store)?;
    }
    Ok(Json(next))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub session_id: String,
    pub item_id: String,
    pub position: usize,
    pub value: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreAck {
    pub status: String,
    pub record: ScoreRecord,
}

async fn score(
    State(svc): State<Arc<EvalService>>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> Result<Json<ScoreAck>, ServiceError> {
    let Json(req) = body?;
    let mut store = svc.lock();
    let record = store.record_score(&req.session_id, &req.item_id, req.position, req.value, (svc.clock)())?;
    svc.persist(&store)?;
    Ok(Json(ScoreAck { status: "ok".into(), record }))
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    granularity: Option<String>,
    #[serde(default)]
    normalized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBody {
    pub scale_max: f64,
    pub cells: Vec<ReportCell>,
    pub diagnostics: Diagnostics,
}

async fn report(
    State(svc): State<Arc<EvalService>>,
    Query(q): Query<ReportQuery>,
) -> Result<Json<ReportBody>, ServiceError> {
    let granularity = q
        .granularity
        .map(|g| g.parse::<Granularity>().map_err(|_| ServiceError::BadRequest(format!("unknown granularity '{g}'"))))
        .transpose()?;
    let agg = svc.lock().aggregate();
    let scale = if q.normalized { LIKERT_MAX as f64 } else { 1.0 };
    let cells = agg
        .cells
        .into_iter()
        .filter(|c| granularity.is_none_or(|g| c.granularity == g))
        .map(|c| ReportCell {
            mean: c.mean / scale,
            std: c.std / scale,
            ..c
        })
        .collect();
    Ok(Json(ReportBody {
        scale_max: LIKERT_MAX as f64 / scale,
        cells,
        diagnostics: agg.diagnostics,
    }))
}

async fn export(State(svc): State<Arc<EvalService>>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], svc.export())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportSummary {
    pub items: usize,
    pub sessions: usize,
    pub scores: usize,
}

async fn import(State(svc): State<Arc<EvalService>>, body: Bytes) -> Result<Json<ImportSummary>, ServiceError> {
    let ds = import_eval_dataset(&body[..])?;
    let summary = ImportSummary {
        items: ds.items.len(),
        sessions: ds.sessions.len(),
        scores: ds.scores.len(),
    };
    let fresh = EvalStore::from_dataset(ds, svc.base_seed)?;
    let mut store = svc.lock();
    *store = fresh;
    svc.persist(&store)?;
    Ok(Json(summary))
}
