//! HTTP session service for the GLC workbench.
//!
//! Sessions hold an uploaded dataset and its append-only version chain.
//! Mutations quote the head version they expect and are serialized per
//! session. Evaluation and pipeline runs are jobs on a bounded worker pool.

mod error;
mod jobs;
mod routes;
mod session;
mod store;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::Router;
use tokio::sync::{Mutex, Semaphore};

pub use error::ApiError;
pub use store::Store;

use jobs::Job;
use session::Session;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Session directory; in-memory only when `None`.
    pub store: Option<PathBuf>,
    /// Jobs allowed to run at once.
    pub workers: usize,
    /// Upload size limit in bytes.
    pub max_upload: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            store: None,
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
            max_upload: 64 * 1024 * 1024,
        }
    }
}

type SessionMap = HashMap<String, Arc<Mutex<Session>>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<SessionMap>>,
    jobs: Arc<RwLock<HashMap<String, Arc<Job>>>>,
    workers: Arc<Semaphore>,
    store: Option<Store>,
    max_upload: usize,
}

impl AppState {
    /// Opens the store, if any, and loads the sessions found there.
    pub fn new(config: &ServiceConfig) -> std::io::Result<AppState> {
        let store = config.store.as_ref().map(Store::open).transpose()?;
        let mut sessions = HashMap::new();
        if let Some(store) = &store {
            for s in store.load_all()? {
                sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(AppState {
            sessions: Arc::new(RwLock::new(sessions)),
            jobs: Arc::new(RwLock::new(HashMap::new())),
            workers: Arc::new(Semaphore::new(config.workers.max(1))),
            store,
            max_upload: config.max_upload,
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map").len()
    }
}

pub fn router(state: AppState) -> Router {
    routes::router(state)
}

/// Serves `state` on `listener` in a background task.
pub fn spawn(listener: tokio::net::TcpListener, state: AppState) -> tokio::task::JoinHandle<std::io::Result<()>> {
    tokio::spawn(async move { axum::serve(listener, router(state)).await })
}

/// Starts an in-process server on an ephemeral loopback port.
pub async fn spawn_local(config: &ServiceConfig) -> std::io::Result<std::net::SocketAddr> {
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    spawn(listener, state);
    Ok(addr)
}
