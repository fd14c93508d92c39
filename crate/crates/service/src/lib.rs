//! Paraphrase annotation service over a generated corpus.
//!
//! Tasks are one per dialog. Paraphrases and reports are appended to a
//! JSONL log in the store directory and replayed on startup.

mod app;
mod export;
mod media;
mod store;
mod task;
pub mod types;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use memdialog_core::corpus::{read_corpus, CorpusError};
use thiserror::Error;
use tokio::net::TcpListener;

pub use app::{router, AppState, DEFAULT_LIMIT, MAX_LIMIT};
pub use export::{export_annotated, ExportError};
pub use media::placeholder_svg;
pub use store::{load_tasks, Store, StoreError, LOG_FILE};
pub use task::TaskError;
pub use types::*;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Mismatch(String),
    #[error("{addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server: {0}")]
    Serve(std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub corpus_dir: PathBuf,
    pub store_dir: PathBuf,
    pub addr: SocketAddr,
    pub media_dir: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
}

pub fn load_state(config: &ServiceConfig) -> Result<AppState, ServiceError> {
    let corpus = read_corpus(&config.corpus_dir)?;
    let (store, stored) = Store::open(&config.store_dir)?;
    AppState::new(corpus, store, stored, config.media_dir.clone()).map_err(ServiceError::Mismatch)
}

/// Binds and returns the bound address with the server future.
pub async fn bind(
    config: &ServiceConfig,
) -> Result<(SocketAddr, impl std::future::Future<Output = Result<(), ServiceError>>), ServiceError> {
    let state = Arc::new(load_state(config)?);
    let app = router(state, config.ui_dir.clone());
    let listener = TcpListener::bind(config.addr).await.map_err(|source| ServiceError::Bind { addr: config.addr, source })?;
    let local = listener.local_addr().map_err(|source| ServiceError::Bind { addr: config.addr, source })?;
    Ok((local, async move { axum::serve(listener, app).await.map_err(ServiceError::Serve) }))
}

pub async fn run(config: ServiceConfig) -> Result<(), ServiceError> {
    let (addr, server) = bind(&config).await?;
    tracing::info!("annotation service listening on http://{addr}");
    server.await
}
