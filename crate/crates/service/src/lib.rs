//! HTTP labeling service: dataset upload, per-task labeling sessions,
//! batch delivery with pseudo-labels and heat values, label submission
//! with retraining, export, and on-disk persistence.
//!
//! Storage layout under the data directory:
//!
//! ```text
//! datasets/<id>.csv                 uploaded CSV, verbatim
//! sessions/<id>/session.json        session settings
//! sessions/<id>/events.jsonl        append-only presented/label events
//! sessions/<id>/models/v<N>.json    model snapshot per version
//! ```

pub mod api;
pub mod error;
pub mod session;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use xlabel_core::ebm::TrainConfig;
use xlabel_core::labeling::SamplingMethod;
use xlabel_core::ncd::{read_dataset, ClinicalLists, Task};

pub use api::router;
pub use error::{ServiceError, ServiceResult};
pub use session::{DatasetEntry, Session, SessionMeta, Status};

/// Environment variable naming the data directory.
pub const DATA_DIR_ENV: &str = "XLABEL_DATA_DIR";

struct Inner {
    dir: PathBuf,
    lists: ClinicalLists,
    train: TrainConfig,
    datasets: RwLock<HashMap<String, Arc<DatasetEntry>>>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    next_dataset: AtomicU64,
    next_session: AtomicU64,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn id_number(id: &str) -> u64 {
    id.rsplit('-').next().and_then(|n| n.parse().ok()).unwrap_or(0)
}

fn header_columns(body: &[u8]) -> Vec<String> {
    let first = body.split(|&b| b == b'\n').next().unwrap_or_default();
    String::from_utf8_lossy(first)
        .trim_start_matches('\u{feff}')
        .split(',')
        .map(|c| c.trim().trim_matches('"').to_string())
        .filter(|c| !c.is_empty())
        .collect()
}

impl AppState {
    /// Open (or create) a data directory and reload everything in it.
    pub fn open(dir: impl Into<PathBuf>, lists: ClinicalLists, train: TrainConfig) -> ServiceResult<Self> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("datasets"))?;
        fs::create_dir_all(dir.join("sessions"))?;

        let mut datasets = HashMap::new();
        for entry in sorted_entries(&dir.join("datasets"))? {
            let Some(id) = entry.file_stem().and_then(|s| s.to_str()).map(String::from) else { continue };
            if entry.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let body = fs::read(&entry)?;
            let dataset = read_dataset(body.as_slice())?;
            datasets.insert(id.clone(), Arc::new(DatasetEntry::new(id, dataset, header_columns(&body))));
        }

        let mut sessions = HashMap::new();
        for entry in sorted_entries(&dir.join("sessions"))? {
            if !entry.join("session.json").exists() {
                continue;
            }
            let session = Session::load(entry, &datasets, &lists)?;
            sessions.insert(session.meta.id.clone(), Arc::new(session));
        }
        log::info!("loaded {} datasets and {} sessions from {}", datasets.len(), sessions.len(), dir.display());

        let next_dataset = datasets.keys().map(|k| id_number(k)).max().unwrap_or(0) + 1;
        let mut next_session = sessions.keys().map(|k| id_number(k)).max().unwrap_or(0) + 1;
        // half-written session directories still reserve their id
        for entry in sorted_entries(&dir.join("sessions"))? {
            if let Some(name) = entry.file_name().and_then(|s| s.to_str()) {
                next_session = next_session.max(id_number(name) + 1);
            }
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                dir,
                lists,
                train,
                datasets: RwLock::new(datasets),
                sessions: RwLock::new(sessions),
                next_dataset: AtomicU64::new(next_dataset),
                next_session: AtomicU64::new(next_session),
            }),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.inner.dir
    }

    /// Parse and store an uploaded CSV.
    pub fn add_dataset(&self, body: &[u8]) -> ServiceResult<Arc<DatasetEntry>> {
        if body.iter().all(u8::is_ascii_whitespace) {
            return Err(ServiceError::BadRequest("empty upload: expected a CSV with a header row".into()));
        }
        let dataset = read_dataset(body)?;
        let id = format!("ds-{:04}", self.inner.next_dataset.fetch_add(1, Ordering::SeqCst));
        let path = self.inner.dir.join("datasets").join(format!("{id}.csv"));
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &path)?;
        let entry = Arc::new(DatasetEntry::new(id.clone(), dataset, header_columns(body)));
        self.inner.datasets.write().expect("lock").insert(id, entry.clone());
        Ok(entry)
    }

    pub fn dataset(&self, id: &str) -> ServiceResult<Arc<DatasetEntry>> {
        self.inner
            .datasets
            .read()
            .expect("lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("dataset {id}")))
    }

    pub fn session(&self, id: &str) -> ServiceResult<Arc<Session>> {
        self.inner
            .sessions
            .read()
            .expect("lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }

    pub fn lists(&self) -> &ClinicalLists {
        &self.inner.lists
    }

    /// Create a session; trains right away when the imported labels hold
    /// both classes.
    pub async fn create_session(
        &self,
        dataset_id: &str,
        task: Task,
        sampling: SamplingMethod,
        detect_mismatches: bool,
    ) -> ServiceResult<Arc<Session>> {
        sampling.validate()?;
        let dataset = self.dataset(dataset_id)?;
        let id = format!("s-{:04}", self.inner.next_session.fetch_add(1, Ordering::SeqCst));
        let meta = SessionMeta {
            id: id.clone(),
            dataset_id: dataset_id.to_string(),
            task,
            sampling,
            detect_mismatches,
            train: self.inner.train.clone(),
            initial_version: 0,
        };
        let dir = self.inner.dir.join("sessions").join(&id);
        let lists = self.inner.lists.clone();
        let session =
            tokio::task::spawn_blocking(move || Session::create(meta, dataset, &lists, dir)).await??;
        let session = Arc::new(session);
        self.inner.sessions.write().expect("lock").insert(id, session.clone());
        Ok(session)
    }
}

fn sorted_entries(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    out.sort();
    Ok(out)
}

/// Serve `state` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// A server running on a background task.
pub struct ServerHandle {
    pub addr: std::net::SocketAddr,
    stop: tokio::sync::oneshot::Sender<()>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    /// Stop accepting connections and wait for in-flight requests.
    pub async fn stop(self) -> std::io::Result<()> {
        let _ = self.stop.send(());
        self.task.await.map_err(std::io::Error::other)?
    }
}

/// Bind `addr` (e.g. `127.0.0.1:0`) and serve `state` in the background.
pub async fn spawn(state: AppState, addr: &str) -> std::io::Result<ServerHandle> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (stop, rx) = tokio::sync::oneshot::channel();
    let task = tokio::spawn(serve(listener, state, async {
        let _ = rx.await;
    }));
    Ok(ServerHandle { addr, stop, task })
}
