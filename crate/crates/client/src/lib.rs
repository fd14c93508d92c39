//! Async HTTP client for the annotation service.

use std::collections::BTreeMap;

use memdialog_service::{ErrorBody, ReportRequest, TaskDetail, TaskList, TaskStatus, TaskSummary, ANNOTATOR_HEADER};
use reqwest::{Method, RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{status}: {message}")]
    Status { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Status { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ListOptions {
    pub status: Option<TaskStatus>,
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Media {
    pub content_type: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
    annotator: Option<String>,
}

impl Client {
    /// `base` is e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Self { base, http: reqwest::Client::new(), annotator: None }
    }

    pub fn with_annotator(mut self, id: impl Into<String>) -> Self {
        self.annotator = Some(id.into());
        self
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let req = self.http.request(method, format!("{}{}", self.base, path));
        match &self.annotator {
            Some(a) => req.header(ANNOTATOR_HEADER, a),
            None => req,
        }
    }

    async fn checked(resp: Response) -> Result<Response, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Status { status, message })
    }

    async fn json<T: DeserializeOwned>(req: RequestBuilder) -> Result<T, ClientError> {
        Ok(Self::checked(req.send().await?).await?.json().await?)
    }

    pub async fn health(&self) -> Result<serde_json::Value, ClientError> {
        Self::json(self.request(Method::GET, "/healthz")).await
    }

    pub async fn list_tasks(&self, opts: &ListOptions) -> Result<TaskList, ClientError> {
        let mut query = Vec::new();
        if let Some(s) = opts.status {
            query.push(format!("status={s}"));
        }
        if let Some(o) = opts.offset {
            query.push(format!("offset={o}"));
        }
        if let Some(l) = opts.limit {
            query.push(format!("limit={l}"));
        }
        let path = if query.is_empty() { "/tasks".to_string() } else { format!("/tasks?{}", query.join("&")) };
        Self::json(self.request(Method::GET, &path)).await
    }

    fn task_path(dialog_id: &str) -> String {
        format!("/tasks/{}", encode_segment(dialog_id))
    }

    pub async fn get_task(&self, dialog_id: &str) -> Result<TaskDetail, ClientError> {
        Self::json(self.request(Method::GET, &Self::task_path(dialog_id))).await
    }

    pub async fn submit_paraphrases(
        &self,
        dialog_id: &str,
        texts: &BTreeMap<usize, String>,
    ) -> Result<TaskSummary, ClientError> {
        let path = format!("{}/paraphrases", Self::task_path(dialog_id));
        Self::json(self.request(Method::POST, &path).json(texts)).await
    }

    pub async fn report(&self, dialog_id: &str, reason: &str) -> Result<TaskSummary, ClientError> {
        let path = format!("{}/report", Self::task_path(dialog_id));
        Self::json(self.request(Method::POST, &path).json(&ReportRequest { reason: reason.to_string() })).await
    }

    pub async fn media(&self, media_id: &str) -> Result<Media, ClientError> {
        let resp = self.request(Method::GET, &format!("/media/{}", encode_segment(media_id))).send().await?;
        let resp = Self::checked(resp).await?;
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        Ok(Media { content_type, bytes: resp.bytes().await?.to_vec() })
    }
}

fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
