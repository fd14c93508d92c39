use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use memdialog_core::corpus::Corpus;
use memdialog_core::dialogsim::{Dialog, Speaker};
use memdialog_core::memgraph::{GraphIndex, MemoryId};
use parking_lot::RwLock;
use serde::Deserialize;
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::media::{asset_path, content_type, placeholder_svg};
use crate::store::{Store, StoreError};
use crate::task::TaskError;
use crate::types::*;

pub const DEFAULT_LIMIT: usize = 100;
pub const MAX_LIMIT: usize = 1000;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Unprocessable(String),
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Internal(m) => {
                tracing::error!("{m}");
                (StatusCode::INTERNAL_SERVER_ERROR, m)
            }
        };
        (status, Json(ErrorBody { error })).into_response()
    }
}

impl From<TaskError> for ApiError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::Reported(_) => ApiError::Conflict(e.to_string()),
            _ => ApiError::Unprocessable(e.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

struct TaskSlot {
    dialog: usize,
    writer: Mutex<()>,
    snapshot: RwLock<Arc<TaskState>>,
}

/// Loaded corpus plus the live task table.
pub struct AppState {
    corpus: Corpus,
    tasks: BTreeMap<String, TaskSlot>,
    store: Arc<Store>,
    media_dir: Option<PathBuf>,
}

impl AppState {
    /// Fails when the store mentions a dialog the corpus does not have.
    pub fn new(
        corpus: Corpus,
        store: Store,
        stored: BTreeMap<String, TaskState>,
        media_dir: Option<PathBuf>,
    ) -> Result<Self, String> {
        if let Some(id) = stored.keys().find(|id| !corpus.dialogs.iter().any(|d| &&d.dialog_id == id)) {
            return Err(format!("store has a task for unknown dialog {id}"));
        }
        let tasks = corpus
            .dialogs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let state = stored.get(&d.dialog_id).cloned().unwrap_or_else(|| TaskState::pending(&d.dialog_id));
                let slot = TaskSlot { dialog: i, writer: Mutex::new(()), snapshot: RwLock::new(Arc::new(state)) };
                (d.dialog_id.clone(), slot)
            })
            .collect();
        Ok(Self { corpus, tasks, store: Arc::new(store), media_dir })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn task_states(&self) -> BTreeMap<String, TaskState> {
        self.tasks.iter().map(|(k, s)| (k.clone(), (*s.snapshot.read().clone()).clone())).collect()
    }

    fn slot(&self, id: &str) -> Result<&TaskSlot, ApiError> {
        self.tasks.get(id).ok_or_else(|| ApiError::NotFound(format!("unknown dialog {id}")))
    }

    fn dialog(&self, slot: &TaskSlot) -> &Dialog {
        &self.corpus.dialogs[slot.dialog]
    }

    fn summary(&self, slot: &TaskSlot, task: &TaskState) -> TaskSummary {
        let dialog = self.dialog(slot);
        TaskSummary {
            dialog_id: dialog.dialog_id.clone(),
            graph_id: dialog.graph_id.clone(),
            status: task.status,
            turn_count: dialog.turns.len(),
            paraphrased: task.paraphrases.len(),
            annotator_id: task.annotator_id.clone(),
            updated_at: task.updated_at,
        }
    }

    fn detail(&self, slot: &TaskSlot, task: &TaskState) -> TaskDetail {
        let dialog = self.dialog(slot);
        let graph = self.corpus.graph(&dialog.graph_id);
        let index = graph.map(GraphIndex::new);
        let mut visible: Vec<VisibleMedia> = Vec::new();
        let mut turns = Vec::with_capacity(dialog.turns.len());
        for turn in &dialog.turns {
            if turn.speaker == Speaker::Assistant {
                for &id in &turn.shown_memory_ids {
                    if !visible.iter().any(|v| v.memory_id == id) {
                        visible.push(describe(index.as_ref(), id));
                    }
                }
            }
            turns.push(TurnView {
                index: turn.index,
                speaker: turn.speaker,
                template_utterance: turn.template_utterance.clone(),
                annotation: turn.annotation.clone(),
                paraphrase: task.paraphrases.get(&turn.index).cloned(),
                visible: visible.clone(),
            });
        }
        TaskDetail { summary: self.summary(slot, task), report_reason: task.report_reason.clone(), turns }
    }

    /// Applies `change` under the task's writer lock, persists, then publishes.
    async fn update(
        &self,
        id: &str,
        change: impl FnOnce(&TaskState, usize) -> Result<TaskState, TaskError>,
    ) -> Result<TaskSummary, ApiError> {
        let slot = self.slot(id)?;
        let _guard = slot.writer.lock().await;
        let current = slot.snapshot.read().clone();
        let next = change(&current, self.dialog(slot).turns.len())?;
        let store = self.store.clone();
        let record = next.clone();
        tokio::task::spawn_blocking(move || store.append(&record))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))??;
        let summary = self.summary(slot, &next);
        *slot.snapshot.write() = Arc::new(next);
        Ok(summary)
    }

    fn media_label(&self, media_id: &str) -> String {
        self.corpus
            .catalog
            .media(media_id)
            .map(|m| m.activity_label.clone())
            .unwrap_or_else(|| media_id.to_string())
    }
}

fn describe(index: Option<&GraphIndex<'_>>, id: MemoryId) -> VisibleMedia {
    let memory = index.and_then(|ix| ix.memory(id));
    let Some((ix, m)) = index.zip(memory) else {
        return VisibleMedia {
            memory_id: id,
            media_id: String::new(),
            url: String::new(),
            activity: String::new(),
            place: String::new(),
            date: String::new(),
            participants: Vec::new(),
        };
    };
    VisibleMedia {
        memory_id: id,
        media_id: m.media_id.clone(),
        url: format!("/media/{}", m.media_id),
        activity: m.activity_label.clone(),
        place: ix.place(&m.place_id).map(|p| p.display_name()).unwrap_or_default(),
        date: m.timestamp.format("%Y-%m-%d").to_string(),
        participants: ix.participant_names(m).into_iter().map(str::to_string).collect(),
    }
}

fn annotator(headers: &HeaderMap) -> Option<String> {
    headers
        .get(ANNOTATOR_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    status: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

type Shared = State<Arc<AppState>>;

async fn list_tasks(State(app): Shared, query: Result<Query<ListQuery>, QueryRejection>) -> Result<Json<TaskList>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let status = q.status.as_deref().map(str::parse::<TaskStatus>).transpose().map_err(ApiError::BadRequest)?;
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(DEFAULT_LIMIT).min(MAX_LIMIT);
    let matching: Vec<TaskSummary> = app
        .tasks
        .values()
        .filter_map(|slot| {
            let task = slot.snapshot.read().clone();
            status.is_none_or(|s| s == task.status).then(|| app.summary(slot, &task))
        })
        .collect();
    let total = matching.len();
    let tasks = matching.into_iter().skip(offset).take(limit).collect();
    Ok(Json(TaskList { total, offset, limit, tasks }))
}

async fn get_task(State(app): Shared, Path(id): Path<String>) -> Result<Json<TaskDetail>, ApiError> {
    let slot = app.slot(&id)?;
    let task = slot.snapshot.read().clone();
    Ok(Json(app.detail(slot, &task)))
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::Unprocessable(format!("malformed body: {e}")))
}

async fn submit_paraphrases(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<TaskSummary>, ApiError> {
    app.slot(&id)?;
    let texts: BTreeMap<usize, String> = parse_body(&body)?;
    let who = annotator(&headers);
    let summary = app
        .update(&id, |task, turns| task.with_paraphrases(&texts, turns, who.as_deref(), Utc::now()))
        .await?;
    Ok(Json(summary))
}

async fn report(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<TaskSummary>, ApiError> {
    app.slot(&id)?;
    let req: ReportRequest = parse_body(&body)?;
    let who = annotator(&headers);
    let summary = app.update(&id, |task, _| task.with_report(&req.reason, who.as_deref(), Utc::now())).await?;
    Ok(Json(summary))
}

async fn media(State(app): Shared, Path(media_id): Path<String>) -> Response {
    let asset = app
        .media_dir
        .as_deref()
        .zip(app.corpus.catalog.media(&media_id).and_then(|m| m.asset_ref.as_deref()))
        .and_then(|(root, r)| asset_path(root, r));
    if let Some(path) = asset {
        match tokio::fs::read(&path).await {
            Ok(bytes) => return ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
            Err(e) => tracing::warn!("media {media_id}: {}: {e}", path.display()),
        }
    }
    let svg = placeholder_svg(&app.media_label(&media_id));
    ([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response()
}

async fn healthz(State(app): Shared) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "dialogs": app.tasks.len() }))
}

pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/paraphrases", post(submit_paraphrases))
        .route("/tasks/{id}/report", post(report))
        .route("/media/{media_id}", get(media))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
