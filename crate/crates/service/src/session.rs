//! Session state: one task's label store and model over an uploaded
//! dataset, with its append-only event log and model snapshots.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwap;
use serde::{Deserialize, Serialize};
use xlabel_core::ebm::{fit, log_loss, EbmModel, FeatureVector, TrainConfig};
use xlabel_core::labeling::{Decision, DecisionCounts, LabelStore, Provenance, SamplingMethod};
use xlabel_core::ncd::{extract_features, feature_names, ClinicalLists, Dataset, Task, Upstream};
use xlabel_core::XlabelError;

use crate::error::{ServiceError, ServiceResult};

/// An uploaded dataset plus an id → row lookup.
#[derive(Debug)]
pub struct DatasetEntry {
    pub id: String,
    pub dataset: Dataset,
    pub columns: Vec<String>,
    pub rows: HashMap<String, usize>,
}

impl DatasetEntry {
    pub fn new(id: String, dataset: Dataset, columns: Vec<String>) -> Self {
        let rows = dataset.records.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        DatasetEntry { id, dataset, columns, rows }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Trained,
    Untrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub dataset_id: String,
    pub task: Task,
    pub sampling: SamplingMethod,
    pub detect_mismatches: bool,
    pub train: TrainConfig,
    /// Model version right after creation: 1 when trained, 0 otherwise.
    pub initial_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetrics {
    pub log_loss: f64,
    pub labeled: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsResponse {
    pub counts: DecisionCounts,
    pub model_unchanged: bool,
    pub status: Status,
    pub model_version: u64,
    pub training: Option<TrainingMetrics>,
    pub labeled: usize,
    pub unlabeled: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Event {
    Presented {
        batch: Vec<(usize, u8)>,
    },
    Labels {
        request_id: Option<String>,
        decisions: Vec<Decision>,
        response: LabelsResponse,
    },
}

/// What readers see. Replaced wholesale, never mutated in place.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub store: LabelStore,
    pub model: Option<Arc<EbmModel>>,
    pub model_version: u64,
}

impl Snapshot {
    pub fn status(&self) -> Status {
        if self.model.is_some() {
            Status::Trained
        } else {
            Status::Untrained
        }
    }
}

/// One entry of a batch: record index and whether it is a mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchItem {
    pub index: usize,
    pub is_mismatch: bool,
}

struct Writer {
    log: File,
    replies: HashMap<String, LabelsResponse>,
}

pub struct Session {
    pub meta: SessionMeta,
    pub dataset: Arc<DatasetEntry>,
    dir: PathBuf,
    snapshot: ArcSwap<Snapshot>,
    writer: tokio::sync::Mutex<Writer>,
}

/// Feature vectors for `task`. Upstream `*_pred` values come from the
/// dataset's own labels for the upstream task; records without one get the
/// prediction of an upstream model fitted on the labeled records.
pub fn task_features(
    dataset: &Dataset,
    task: Task,
    lists: &ClinicalLists,
    train: &TrainConfig,
) -> ServiceResult<Vec<FeatureVector>> {
    let mut upstream = vec![Upstream::new(); dataset.len()];
    for &u in task.upstream() {
        let labels = dataset.task_labels(u);
        let values: Vec<u8> = if labels.iter().all(Option::is_some) {
            labels.iter().map(|y| y.expect("checked")).collect()
        } else {
            let features = dataset
                .records
                .iter()
                .zip(&upstream)
                .map(|(r, up)| extract_features(lists, r, u, up))
                .collect::<Result<Vec<_>, _>>()?;
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
            let data: Vec<FeatureVector> = idx.iter().map(|&i| features[i].clone()).collect();
            let ys: Vec<u8> = idx.iter().map(|&i| labels[i].expect("labeled")).collect();
            let model = fit(feature_names(u), &data, &ys, train).map_err(|e| match e {
                XlabelError::DegenerateLabels | XlabelError::InvalidInput(_) => ServiceError::Conflict(format!(
                    "{task} needs {u} predictions, but the {u} labels are incomplete and cannot train a {u} model"
                )),
                other => other.into(),
            })?;
            labels
                .iter()
                .zip(&features)
                .map(|(y, x)| match y {
                    Some(y) => Ok(*y),
                    None => model.predict_label(x),
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        for (up, y) in upstream.iter_mut().zip(values) {
            up.insert(u, y);
        }
    }
    Ok(dataset
        .records
        .iter()
        .zip(&upstream)
        .map(|(r, up)| extract_features(lists, r, task, up))
        .collect::<Result<Vec<_>, _>>()?)
}

fn initial_store(dataset: &Dataset, task: Task, features: Vec<FeatureVector>) -> ServiceResult<LabelStore> {
    let names = feature_names(task).iter().map(|s| s.to_string()).collect();
    let mut store = LabelStore::new(names, features)?;
    for (i, y) in dataset.task_labels(task).into_iter().enumerate() {
        if let Some(y) = y {
            store.import_label(i, y)?;
        }
    }
    Ok(store)
}

/// Mismatches first, then sampled unlabeled records. Records a human has
/// already labeled are never flagged again.
pub fn select_batch(
    store: &LabelStore,
    model: &EbmModel,
    sampling: SamplingMethod,
    detect_mismatches: bool,
) -> ServiceResult<Vec<BatchItem>> {
    let mut items = Vec::new();
    if detect_mismatches {
        for m in store.detect_mismatches(model)? {
            if store.provenance(m.index) != Some(Provenance::Human) {
                items.push(BatchItem { index: m.index, is_mismatch: true });
            }
        }
    }
    let sampled = match store.sample(model, sampling) {
        Ok(s) => s,
        Err(XlabelError::EmptyPool) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    items.extend(sampled.into_iter().map(|index| BatchItem { index, is_mismatch: false }));
    Ok(items)
}

fn training_metrics(store: &LabelStore, model: &EbmModel) -> ServiceResult<TrainingMetrics> {
    let idx = store.labeled_indices();
    let data: Vec<FeatureVector> = idx.iter().map(|&i| store.features()[i].clone()).collect();
    let labels: Vec<u8> = idx.iter().map(|&i| store.label(i).expect("labeled")).collect();
    Ok(TrainingMetrics {
        log_loss: log_loss(model, &data, &labels)?,
        labeled: labels.len(),
        positives: labels.iter().filter(|&&y| y == 1).count(),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

fn model_path(dir: &Path, version: u64) -> PathBuf {
    dir.join("models").join(format!("v{version:06}.json"))
}

fn append(log: &mut File, event: &Event) -> ServiceResult<()> {
    let mut line = serde_json::to_vec(event)?;
    line.push(b'\n');
    log.write_all(&line)?;
    log.sync_data()?;
    Ok(())
}

impl Session {
    /// Create a session, train if the imported labels allow it, and persist
    /// it under `dir`.
    pub fn create(
        meta: SessionMeta,
        dataset: Arc<DatasetEntry>,
        lists: &ClinicalLists,
        dir: PathBuf,
    ) -> ServiceResult<Session> {
        let mut meta = meta;
        let features = task_features(&dataset.dataset, meta.task, lists, &meta.train)?;
        let store = initial_store(&dataset.dataset, meta.task, features)?;
        let model = match store.retrain(&meta.train) {
            Ok(m) => Some(Arc::new(m)),
            Err(XlabelError::DegenerateLabels) => None,
            Err(e) => return Err(e.into()),
        };
        meta.initial_version = u64::from(model.is_some());
        fs::create_dir_all(dir.join("models"))?;
        if let Some(m) = &model {
            write_atomic(&model_path(&dir, 1), &m.serialize())?;
        }
        let log = OpenOptions::new().create(true).append(true).open(dir.join("events.jsonl"))?;
        // session.json is the commit point: directories without it are ignored
        write_atomic(&dir.join("session.json"), &serde_json::to_vec_pretty(&meta)?)?;
        let snapshot = Snapshot { store, model, model_version: meta.initial_version };
        Ok(Session {
            meta,
            dataset,
            dir,
            snapshot: ArcSwap::from_pointee(snapshot),
            writer: tokio::sync::Mutex::new(Writer { log, replies: HashMap::new() }),
        })
    }

    /// Rebuild a persisted session by replaying its event log.
    pub fn load(
        dir: PathBuf,
        datasets: &HashMap<String, Arc<DatasetEntry>>,
        lists: &ClinicalLists,
    ) -> ServiceResult<Session> {
        let meta: SessionMeta = serde_json::from_slice(&fs::read(dir.join("session.json"))?)?;
        let dataset = datasets
            .get(&meta.dataset_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("dataset {}", meta.dataset_id)))?;
        let features = task_features(&dataset.dataset, meta.task, lists, &meta.train)?;
        let mut store = initial_store(&dataset.dataset, meta.task, features)?;
        let mut version = meta.initial_version;
        let mut replies = HashMap::new();

        let log_path = dir.join("events.jsonl");
        if log_path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&log_path)?).lines().collect::<Result<_, _>>()?;
            let last = lines.len().saturating_sub(1);
            for (n, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let event: Event = match serde_json::from_str(line) {
                    Ok(e) => e,
                    Err(e) if n == last => {
                        log::warn!("session {}: dropping torn final event: {e}", meta.id);
                        break;
                    }
                    Err(e) => return Err(e.into()),
                };
                match event {
                    Event::Presented { batch } => store.set_presented(batch.into_iter().collect::<BTreeMap<_, _>>())?,
                    Event::Labels { request_id, decisions, response } => {
                        store.apply_labels(&decisions)?;
                        version = response.model_version;
                        if let Some(id) = request_id {
                            replies.insert(id, response);
                        }
                    }
                }
            }
        }
        let model = if version == 0 {
            None
        } else {
            let bytes = fs::read(model_path(&dir, version))?;
            Some(Arc::new(EbmModel::deserialize(&bytes)?))
        };
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        Ok(Session {
            meta,
            dataset,
            dir,
            snapshot: ArcSwap::from_pointee(Snapshot { store, model, model_version: version }),
            writer: tokio::sync::Mutex::new(Writer { log, replies }),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.load_full()
    }

    /// Select the next batch, record it as presented and return it with the
    /// snapshot it was computed from.
    pub async fn next_batch(&self) -> ServiceResult<(Arc<Snapshot>, Vec<BatchItem>)> {
        let mut writer = self.writer.lock().await;
        let snap = self.snapshot();
        let model = snap.model.clone().ok_or_else(|| {
            ServiceError::Conflict(
                "session is UNTRAINED: submit seed labels of both classes with action \"set\" first".into(),
            )
        })?;
        let items = select_batch(&snap.store, &model, self.meta.sampling, self.meta.detect_mismatches)?;
        if items.is_empty() {
            return Err(ServiceError::Empty);
        }
        let mut store = snap.store.clone();
        let indices: Vec<usize> = items.iter().map(|b| b.index).collect();
        store.present(&indices, &model)?;
        let batch = store.presented().iter().map(|(&i, &y)| (i, y)).collect();
        append(&mut writer.log, &Event::Presented { batch })?;
        let next = Arc::new(Snapshot { store, model: Some(model), model_version: snap.model_version });
        self.snapshot.store(next.clone());
        Ok((next, items))
    }

    /// Apply decisions, retrain off the async runtime and publish the result.
    /// A repeated `request_id` returns the first response unchanged.
    pub async fn submit(&self, request_id: Option<String>, decisions: Vec<Decision>) -> ServiceResult<LabelsResponse> {
        let mut writer = self.writer.lock().await;
        if let Some(previous) = request_id.as_ref().and_then(|id| writer.replies.get(id)) {
            return Ok(previous.clone());
        }
        let snap = self.snapshot();
        let mut store = snap.store.clone();
        let counts = store.apply_labels(&decisions)?;

        let config = self.meta.train.clone();
        let (store, fitted) = tokio::task::spawn_blocking(move || {
            let fitted = store.retrain(&config);
            (store, fitted)
        })
        .await?;
        let (model, version, training) = match fitted {
            Ok(m) => {
                let version = snap.model_version + 1;
                write_atomic(&model_path(&self.dir, version), &m.serialize())?;
                let metrics = training_metrics(&store, &m)?;
                (Some(Arc::new(m)), version, Some(metrics))
            }
            Err(XlabelError::DegenerateLabels) => (snap.model.clone(), snap.model_version, None),
            Err(e) => return Err(e.into()),
        };
        let response = LabelsResponse {
            counts,
            model_unchanged: training.is_none(),
            status: if model.is_some() { Status::Trained } else { Status::Untrained },
            model_version: version,
            training,
            labeled: store.labeled_indices().len(),
            unlabeled: store.unlabeled_indices().len(),
        };
        append(
            &mut writer.log,
            &Event::Labels { request_id: request_id.clone(), decisions, response: response.clone() },
        )?;
        self.snapshot.store(Arc::new(Snapshot { store, model, model_version: version }));
        if let Some(id) = request_id {
            writer.replies.insert(id, response.clone());
        }
        Ok(response)
    }
}
