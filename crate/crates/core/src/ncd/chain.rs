use std::collections::BTreeMap;

use super::{extract_features, ClinicalLists, RawRecord, Task, Upstream};
use crate::ebm::{EbmModel, FeatureVector};
use crate::error::{Result, XlabelError};

#[derive(Debug, Clone, PartialEq)]
pub struct TaskPrediction {
    pub pseudo_label: u8,
    pub p: f64,
    pub heat: Vec<(String, f64)>,
    /// Feature vector the model saw, including injected `*_pred` values.
    pub features: FeatureVector,
}

/// Per-task models evaluated in the fixed order DM → HTN → CKD → DLP, each
/// pseudo-label feeding the `*_pred` features of later tasks.
#[derive(Debug, Clone, Default)]
pub struct TaskChain {
    models: [Option<EbmModel>; 4],
    lists: ClinicalLists,
}

impl TaskChain {
    pub fn new(lists: ClinicalLists) -> Self {
        TaskChain {
            models: Default::default(),
            lists,
        }
    }

    pub fn set_model(&mut self, task: Task, model: EbmModel) {
        self.models[task.index()] = Some(model);
    }

    pub fn model(&self, task: Task) -> Option<&EbmModel> {
        self.models[task.index()].as_ref()
    }

    pub fn lists(&self) -> &ClinicalLists {
        &self.lists
    }

    pub fn predict(&self, record: &RawRecord) -> Result<BTreeMap<Task, TaskPrediction>> {
        self.predict_in_order(record, &Task::CHAIN)
    }

    /// Evaluate the given tasks. The order must be a prefix of the chain
    /// order; anything else is rejected rather than reordered.
    pub fn predict_in_order(
        &self,
        record: &RawRecord,
        order: &[Task],
    ) -> Result<BTreeMap<Task, TaskPrediction>> {
        if order.len() > Task::CHAIN.len() || order != &Task::CHAIN[..order.len()] {
            return Err(XlabelError::ChainOrder(format!(
                "evaluation order {order:?} is not a prefix of DM → HTN → CKD → DLP"
            )));
        }
        let mut upstream = Upstream::new();
        let mut out = BTreeMap::new();
        for &task in order {
            let model = self
                .model(task)
                .ok_or_else(|| XlabelError::ChainOrder(format!("no model for {task}")))?;
            let features = extract_features(&self.lists, record, task, &upstream)?;
            let p = model.predict_proba(&features)?;
            let pseudo_label = u8::from(p >= 0.5);
            let heat = model.heat(&features)?;
            upstream.insert(task, pseudo_label);
            out.insert(
                task,
                TaskPrediction {
                    pseudo_label,
                    p,
                    heat,
                    features,
                },
            );
        }
        Ok(out)
    }
}
