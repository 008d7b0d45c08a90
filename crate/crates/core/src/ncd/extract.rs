use std::collections::BTreeMap;

use super::{ClinicalLists, Dataset, RawRecord, Task};
use crate::ebm::FeatureVector;
use crate::error::{Result, XlabelError};

/// Binary predictions (or confirmed labels) of upstream tasks.
pub type Upstream = BTreeMap<Task, u8>;

/// Input features of each task, in model order.
pub fn feature_names(task: Task) -> &'static [&'static str] {
    match task {
        Task::Dm => &["DM_key", "DM_ICD10", "DM_drugs", "Glucose", "HbA1c", "eGFR"],
        Task::Htn => &["HTN_key", "HTN_ICD10", "HTN_drugs", "sbp1", "dbp1"],
        Task::Ckd => &["CKD_key", "CKD_ICD10", "CKD_drugs", "DM_pred", "HTN_pred", "eGFR"],
        Task::Dlp => &[
            "DLP_key", "DLP_ICD10", "DLP_drugs", "Glucose", "DM_pred", "HTN_pred", "CKD_pred", "LDL-c",
        ],
    }
}

fn flag_source(name: &str) -> Option<(Task, &str)> {
    let (task, kind) = name.split_once('_')?;
    Some((task.parse().ok()?, kind))
}

/// Map a raw record onto the task's feature vector.
pub fn extract_features(
    lists: &ClinicalLists,
    record: &RawRecord,
    task: Task,
    upstream: &Upstream,
) -> Result<FeatureVector> {
    let labs = &record.labs;
    let mut values = Vec::with_capacity(feature_names(task).len());
    for &name in feature_names(task) {
        let v = match name {
            "Glucose" => labs.glucose,
            "HbA1c" => labs.hba1c,
            "eGFR" => labs.egfr,
            "sbp1" => labs.sbp1,
            "dbp1" => labs.dbp1,
            "LDL-c" => labs.ldl_c,
            _ => {
                let (source, kind) = flag_source(name).expect("schema names are well formed");
                let flag = match kind {
                    "key" => lists.keyword_match(&record.note, source).0,
                    "ICD10" => lists.icd10_flag(&record.icd10_codes, source),
                    "drugs" => lists.drug_flag(&record.drugs, source),
                    "pred" => {
                        if source >= task {
                            return Err(XlabelError::ChainOrder(format!(
                                "{task} cannot consume {name}"
                            )));
                        }
                        *upstream.get(&source).ok_or_else(|| {
                            XlabelError::ChainOrder(format!(
                                "{task} features need {name}, but no {source} prediction was supplied"
                            ))
                        })?
                    }
                    _ => unreachable!("unknown feature {name}"),
                };
                if flag > 1 {
                    return Err(XlabelError::invalid(format!("{name} must be 0 or 1")));
                }
                Some(f64::from(flag))
            }
        };
        values.push(v);
    }
    Ok(FeatureVector::new(values))
}

/// One task's fully labeled view of a dataset, with upstream features
/// taken from the dataset's labels of the upstream tasks.
#[derive(Debug, Clone)]
pub struct TaskView {
    pub task: Task,
    pub feature_names: Vec<String>,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<u8>,
    pub records: Vec<RawRecord>,
    pub upstream: Vec<Upstream>,
}

impl TaskView {
    pub fn from_dataset(dataset: &Dataset, task: Task, lists: &ClinicalLists) -> Result<Self> {
        let labels = dataset.complete_labels(task)?;
        let mut upstream_rows = Vec::with_capacity(dataset.len());
        let mut features = Vec::with_capacity(dataset.len());
        for (record, row) in dataset.records.iter().zip(&dataset.labels) {
            let mut up = Upstream::new();
            for &u in task.upstream() {
                let y = row[u.index()].ok_or_else(|| {
                    XlabelError::ChainOrder(format!("record {} has no {u} label for {task}", record.id))
                })?;
                up.insert(u, y);
            }
            features.push(extract_features(lists, record, task, &up)?);
            upstream_rows.push(up);
        }
        Ok(TaskView {
            task,
            feature_names: feature_names(task).iter().map(|s| s.to_string()).collect(),
            features,
            labels,
            records: dataset.records.clone(),
            upstream: upstream_rows,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }
}
