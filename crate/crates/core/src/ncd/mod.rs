//! Non-communicable disease (NCD) records: raw schema, per-task features,
//! keyword highlighting, chained prediction, the guideline baseline and a
//! synthetic record generator.

mod chain;
mod csv_io;
mod extract;
mod lists;
mod record;
mod rules;
mod synth;

pub use chain::{TaskChain, TaskPrediction};
pub use csv_io::{read_dataset, read_dataset_from_path, record_cells, write_dataset, CSV_COLUMNS};
pub use extract::{extract_features, feature_names, TaskView, Upstream};
pub use lists::{ClinicalLists, TaskLists, DEFAULT_LISTS};
pub use record::{Dataset, Labs, RawRecord};
pub use rules::rule_based_classify;
pub use synth::{
    mistype, synth_dataset, synth_generate, SynthConfig, NOTE_FILLERS, REFERENCE_POSITIVES, REFERENCE_SIZE,
    TYPO_VARIANTS,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::XlabelError;

/// Disease tasks in chain order: later tasks may read predictions of earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "DM")]
    Dm,
    #[serde(rename = "HTN")]
    Htn,
    #[serde(rename = "CKD")]
    Ckd,
    #[serde(rename = "DLP")]
    Dlp,
}

impl Task {
    pub const CHAIN: [Task; 4] = [Task::Dm, Task::Htn, Task::Ckd, Task::Dlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Dm => "DM",
            Task::Htn => "HTN",
            Task::Ckd => "CKD",
            Task::Dlp => "DLP",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Tasks whose predictions this task consumes, in chain order.
    pub fn upstream(self) -> &'static [Task] {
        match self {
            Task::Dm | Task::Htn => &[],
            Task::Ckd => &[Task::Dm, Task::Htn],
            Task::Dlp => &[Task::Dm, Task::Htn, Task::Ckd],
        }
    }

    pub fn label_column(self) -> String {
        format!("{}_label", self.as_str())
    }

    pub fn pred_feature(self) -> String {
        format!("{}_pred", self.as_str())
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = XlabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DM" => Ok(Task::Dm),
            "HTN" => Ok(Task::Htn),
            "CKD" => Ok(Task::Ckd),
            "DLP" => Ok(Task::Dlp),
            other => Err(XlabelError::invalid(format!("unknown task {other:?}"))),
        }
    }
}
