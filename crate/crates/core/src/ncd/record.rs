use serde::{Deserialize, Serialize};

use super::Task;
use crate::error::{Result, XlabelError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Labs {
    /// mg/dL
    pub glucose: Option<f64>,
    /// %
    pub hba1c: Option<f64>,
    /// mL/min/1.73m²
    pub egfr: Option<f64>,
    /// mmHg
    pub sbp1: Option<f64>,
    /// mmHg
    pub dbp1: Option<f64>,
    /// mg/dL
    pub ldl_c: Option<f64>,
}

impl Labs {
    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> {
        [self.glucose, self.hba1c, self.egfr, self.sbp1, self.dbp1, self.ldl_c].into_iter()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub age: Option<f64>,
    pub sex: String,
    /// cm
    pub height: Option<f64>,
    /// kg
    pub weight: Option<f64>,
    pub labs: Labs,
    pub icd10_codes: Vec<String>,
    pub drugs: Vec<String>,
    pub note: String,
}

impl RawRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(XlabelError::invalid("record id is empty"));
        }
        if self.labs.iter().flatten().any(|v| !v.is_finite() || v < 0.0) {
            return Err(XlabelError::invalid(format!(
                "record {}: lab values must be finite and non-negative",
                self.id
            )));
        }
        Ok(())
    }
}

/// Records plus the (possibly partial) expert labels of every task.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<RawRecord>,
    pub labels: Vec<[Option<u8>; 4]>,
}

impl Dataset {
    pub fn new(records: Vec<RawRecord>, labels: Vec<[Option<u8>; 4]>) -> Result<Self> {
        if records.len() != labels.len() {
            return Err(XlabelError::invalid("records and label rows differ in length"));
        }
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(XlabelError::invalid(format!("duplicate record id {:?}", r.id)));
            }
        }
        if labels.iter().flatten().flatten().any(|&y| y > 1) {
            return Err(XlabelError::invalid("labels must be 0 or 1"));
        }
        Ok(Dataset { records, labels })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn task_labels(&self, task: Task) -> Vec<Option<u8>> {
        self.labels.iter().map(|row| row[task.index()]).collect()
    }

    /// Labels of `task`, failing if any record is unlabeled.
    pub fn complete_labels(&self, task: Task) -> Result<Vec<u8>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[task.index()].ok_or_else(|| {
                    XlabelError::invalid(format!("record {} has no {task} label", self.records[i].id))
                })
            })
            .collect()
    }

    pub fn labeled_count(&self, task: Task) -> usize {
        self.labels.iter().filter(|row| row[task.index()].is_some()).count()
    }
}
