//! Routes and wire types. MISSING values travel as `null`; heat values are
//! rounded to 6 decimals.

use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use xlabel_core::labeling::{Action, Confidence, Decision, Provenance, SamplingMethod};
use xlabel_core::ncd::{record_cells, ClinicalLists, RawRecord, Task, CSV_COLUMNS};

use crate::error::{ServiceError, ServiceResult};
use crate::session::{Session, Snapshot, Status};
use crate::{AppState, DatasetEntry};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/batch", get(get_batch))
        .route("/sessions/{id}/labels", post(post_labels))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/model", get(get_model))
        .route("/sessions/{id}/explanations/{record_id}", get(get_explanation))
        .layer(DefaultBodyLimit::max(256 * 1024 * 1024))
        .with_state(state)
}

pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TaskCounts {
    pub labeled: usize,
    pub unlabeled: usize,
    pub positives: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub records: usize,
    pub columns: Vec<String>,
    pub tasks: BTreeMap<Task, TaskCounts>,
}

fn summary(entry: &DatasetEntry) -> DatasetSummary {
    let tasks = Task::CHAIN
        .iter()
        .map(|&t| {
            let labels = entry.dataset.task_labels(t);
            let labeled = labels.iter().flatten().count();
            let counts = TaskCounts {
                labeled,
                unlabeled: labels.len() - labeled,
                positives: labels.iter().flatten().filter(|&&y| y == 1).count(),
            };
            (t, counts)
        })
        .collect();
    DatasetSummary {
        dataset_id: entry.id.clone(),
        records: entry.dataset.len(),
        columns: entry.columns.clone(),
        tasks,
    }
}

async fn upload_dataset(State(state): State<AppState>, body: Bytes) -> ServiceResult<(StatusCode, Json<DatasetSummary>)> {
    let entry = tokio::task::spawn_blocking(move || state.add_dataset(&body)).await??;
    Ok((StatusCode::CREATED, Json(summary(&entry))))
}

async fn get_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Json<DatasetSummary>> {
    Ok(Json(summary(&*state.dataset(&id)?)))
}

fn default_sampling() -> SamplingMethod {
    SamplingMethod::NLeast(20)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub dataset_id: String,
    pub task: Task,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingMethod,
    #[serde(default = "default_true")]
    pub detect_mismatches: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub dataset_id: String,
    pub task: Task,
    pub status: Status,
    pub sampling: SamplingMethod,
    pub detect_mismatches: bool,
    pub model_version: u64,
    pub records: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub human_labeled: usize,
}

fn info(session: &Session) -> SessionInfo {
    let snap = session.snapshot();
    let labeled = snap.store.labeled_indices().len();
    SessionInfo {
        session_id: session.meta.id.clone(),
        dataset_id: session.meta.dataset_id.clone(),
        task: session.meta.task,
        status: snap.status(),
        sampling: session.meta.sampling,
        detect_mismatches: session.meta.detect_mismatches,
        model_version: snap.model_version,
        records: snap.store.len(),
        labeled,
        unlabeled: snap.store.len() - labeled,
        human_labeled: (0..snap.store.len())
            .filter(|&i| snap.store.provenance(i) == Some(Provenance::Human))
            .count(),
    }
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<CreateSession>,
) -> ServiceResult<(StatusCode, Json<SessionInfo>)> {
    let session = state
        .create_session(&req.dataset_id, req.task, req.sampling, req.detect_mismatches)
        .await?;
    Ok((StatusCode::CREATED, Json(info(&session))))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Json<SessionInfo>> {
    Ok(Json(info(&*state.session(&id)?)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RecordFields {
    pub age: Option<f64>,
    pub sex: String,
    pub height: Option<f64>,
    pub weight: Option<f64>,
    #[serde(rename = "Glucose")]
    pub glucose: Option<f64>,
    #[serde(rename = "HbA1c")]
    pub hba1c: Option<f64>,
    #[serde(rename = "eGFR")]
    pub egfr: Option<f64>,
    pub sbp1: Option<f64>,
    pub dbp1: Option<f64>,
    #[serde(rename = "LDL-c")]
    pub ldl_c: Option<f64>,
    pub icd10: Vec<String>,
    pub drugs: Vec<String>,
}

impl From<&RawRecord> for RecordFields {
    fn from(r: &RawRecord) -> Self {
        RecordFields {
            age: r.age,
            sex: r.sex.clone(),
            height: r.height,
            weight: r.weight,
            glucose: r.labs.glucose,
            hba1c: r.labs.hba1c,
            egfr: r.labs.egfr,
            sbp1: r.labs.sbp1,
            dbp1: r.labs.dbp1,
            ldl_c: r.labs.ldl_c,
            icd10: r.icd10_codes.clone(),
            drugs: r.drugs.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeatureCell {
    pub name: String,
    pub value: Option<f64>,
    pub heat: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatchRecord {
    pub record_id: String,
    pub fields: RecordFields,
    pub note: String,
    pub highlights: Vec<Span>,
    pub pseudo_label: u8,
    pub p: f64,
    pub confidence: f64,
    pub features: Vec<FeatureCell>,
    pub is_mismatch: bool,
    pub stored_label: Option<u8>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatchResponse {
    pub session_id: String,
    pub task: Task,
    pub model_version: u64,
    pub mismatches: usize,
    pub sampled: usize,
    pub records: Vec<BatchRecord>,
}

fn batch_record(
    session: &Session,
    snap: &Snapshot,
    lists: &ClinicalLists,
    index: usize,
    is_mismatch: bool,
) -> ServiceResult<BatchRecord> {
    let model = snap.model.as_ref().expect("batch needs a model");
    let record = &session.dataset.dataset.records[index];
    let x = &snap.store.features()[index];
    let c = Confidence::from_proba(model.predict_proba(x)?);
    let (_, spans) = lists.keyword_match(&record.note, session.meta.task);
    let features = model
        .heat(x)?
        .into_iter()
        .zip(x.values())
        .map(|((name, h), v)| FeatureCell { name, value: *v, heat: round6(h) })
        .collect();
    Ok(BatchRecord {
        record_id: record.id.clone(),
        fields: record.into(),
        note: record.note.clone(),
        highlights: spans.into_iter().map(|(start, end)| Span { start, end }).collect(),
        pseudo_label: c.pseudo_label,
        p: c.p,
        confidence: c.confidence,
        features,
        is_mismatch,
        stored_label: snap.store.label(index),
    })
}

async fn get_batch(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Response> {
    let session = state.session(&id)?;
    let (snap, items) = match session.next_batch().await {
        Ok(b) => b,
        Err(ServiceError::Empty) => return Ok(StatusCode::NO_CONTENT.into_response()),
        Err(e) => return Err(e),
    };
    let records = items
        .iter()
        .map(|b| batch_record(&session, &snap, state.lists(), b.index, b.is_mismatch))
        .collect::<ServiceResult<Vec<_>>>()?;
    let mismatches = items.iter().filter(|b| b.is_mismatch).count();
    Ok(Json(BatchResponse {
        session_id: session.meta.id.clone(),
        task: session.meta.task,
        model_version: snap.model_version,
        mismatches,
        sampled: items.len() - mismatches,
        records,
    })
    .into_response())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireDecision {
    pub record_id: String,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsRequest {
    #[serde(default)]
    pub request_id: Option<String>,
    pub decisions: Vec<WireDecision>,
}

async fn post_labels(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<LabelsRequest>,
) -> ServiceResult<Json<crate::session::LabelsResponse>> {
    let session = state.session(&id)?;
    let decisions = req
        .decisions
        .iter()
        .map(|d| {
            let index = *session
                .dataset
                .rows
                .get(&d.record_id)
                .ok_or_else(|| ServiceError::BadRequest(format!("unknown record id {:?}", d.record_id)))?;
            Ok(Decision { index, action: d.action })
        })
        .collect::<ServiceResult<Vec<_>>>()?;
    Ok(Json(session.submit(req.request_id, decisions).await?))
}

/// Header of the export CSV: the record columns, all four label columns
/// and the provenance of the session task's labels.
pub fn export_header(task: Task) -> Vec<String> {
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(Task::CHAIN.iter().map(|t| t.label_column()));
    header.push(format!("{task}_provenance"));
    header
}

pub fn export_csv(session: &Session, snap: &Snapshot) -> ServiceResult<Vec<u8>> {
    let task = session.meta.task;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| ServiceError::Core(xlabel_core::XlabelError::Csv(e.to_string()));
    w.write_record(export_header(task)).map_err(csv_err)?;
    let ds = &session.dataset.dataset;
    for (i, record) in ds.records.iter().enumerate() {
        let mut row = record_cells(record);
        for t in Task::CHAIN {
            let y = if t == task { snap.store.label(i) } else { ds.labels[i][t.index()] };
            row.push(y.map(|y| y.to_string()).unwrap_or_default());
        }
        row.push(
            match snap.store.provenance(i) {
                Some(Provenance::Human) => "human",
                Some(Provenance::Imported) => "imported",
                None => "",
            }
            .to_string(),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| ServiceError::Io(e.into_error()))
}

async fn export(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Response> {
    let session = state.session(&id)?;
    let snap = session.snapshot();
    let body = export_csv(&session, &snap)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response())
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Response> {
    let session = state.session(&id)?;
    let snap = session.snapshot();
    let model = snap
        .model
        .as_ref()
        .ok_or_else(|| ServiceError::Conflict("session is UNTRAINED; no model yet".into()))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], model.to_json()).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContributionCell {
    pub name: String,
    pub value: Option<f64>,
    pub contribution: f64,
    pub heat: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Explanation {
    pub record_id: String,
    pub model_version: u64,
    pub intercept: f64,
    pub p: f64,
    pub confidence: f64,
    pub pseudo_label: u8,
    pub label: Option<u8>,
    pub provenance: Option<Provenance>,
    pub contributions: Vec<ContributionCell>,
}

/// Full-precision explanation of one record under the current model;
/// does not change the presented batch.
async fn get_explanation(
    State(state): State<AppState>,
    Path((id, record_id)): Path<(String, String)>,
) -> ServiceResult<Json<Explanation>> {
    let session = state.session(&id)?;
    let index = *session
        .dataset
        .rows
        .get(&record_id)
        .ok_or_else(|| ServiceError::NotFound(format!("record {record_id}")))?;
    let snap = session.snapshot();
    let model = snap
        .model
        .as_ref()
        .ok_or_else(|| ServiceError::Conflict("session is UNTRAINED; no model yet".into()))?;
    let x = &snap.store.features()[index];
    let c = Confidence::from_proba(model.predict_proba(x)?);
    let contributions = model
        .contributions(x)?
        .into_iter()
        .zip(model.heat(x)?)
        .zip(x.values())
        .map(|(((name, contribution), (_, heat)), v)| ContributionCell { name, value: *v, contribution, heat })
        .collect();
    Ok(Json(Explanation {
        record_id,
        model_version: snap.model_version,
        intercept: model.intercept(),
        p: c.p,
        confidence: c.confidence,
        pseudo_label: c.pseudo_label,
        label: snap.store.label(index),
        provenance: snap.store.provenance(index),
        contributions,
    }))
}
