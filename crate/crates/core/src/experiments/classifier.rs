use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ebm::{fit, EbmModel, FeatureVector, TrainConfig};
use crate::error::{Result, XlabelError};
use crate::ncd::{rule_based_classify, ClinicalLists, TaskView};

/// A trained predictor over the records of a task view.
pub trait Fitted: Send + Sync {
    fn predict(&self, view: &TaskView, index: usize) -> Result<u8>;

    /// Probability of the positive class, when the model has one.
    fn proba(&self, _view: &TaskView, _index: usize) -> Option<f64> {
        None
    }
}

/// Pluggable model used by the experiment harness.
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;

    /// Train on `train` records of `view` with the given (possibly noisy)
    /// labels, aligned with `train`.
    fn fit(&self, view: &TaskView, train: &[usize], labels: &[u8], seed: u64) -> Result<Box<dyn Fitted>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "EBM")]
    Ebm,
    RuleBased,
    AllNegative,
}

impl ModelKind {
    pub fn classifier(self, lists: &ClinicalLists, config: &TrainConfig) -> Box<dyn Classifier> {
        match self {
            ModelKind::Ebm => Box::new(EbmClassifier { config: config.clone() }),
            ModelKind::RuleBased => Box::new(RuleBased { lists: lists.clone() }),
            ModelKind::AllNegative => Box::new(AllNegative),
        }
    }
}

impl FromStr for ModelKind {
    type Err = XlabelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebm" => Ok(ModelKind::Ebm),
            "rulebased" | "rule-based" | "rules" => Ok(ModelKind::RuleBased),
            "allnegative" | "all-negative" | "negative" => Ok(ModelKind::AllNegative),
            other => Err(XlabelError::invalid(format!("unknown model kind {other:?}"))),
        }
    }
}

pub struct EbmClassifier {
    pub config: TrainConfig,
}

impl Fitted for EbmModel {
    fn predict(&self, view: &TaskView, index: usize) -> Result<u8> {
        self.predict_label(&view.features[index])
    }

    fn proba(&self, view: &TaskView, index: usize) -> Option<f64> {
        self.predict_proba(&view.features[index]).ok()
    }
}

impl Classifier for EbmClassifier {
    fn name(&self) -> &str {
        "EBM"
    }

    fn fit(&self, view: &TaskView, train: &[usize], labels: &[u8], seed: u64) -> Result<Box<dyn Fitted>> {
        let data: Vec<FeatureVector> = train.iter().map(|&i| view.features[i].clone()).collect();
        let config = self.config.clone().with_seed(seed);
        Ok(Box::new(fit(&view.feature_names, &data, labels, &config)?))
    }
}

/// Guideline rules; ignores the training labels entirely.
pub struct RuleBased {
    pub lists: ClinicalLists,
}

struct FittedRules(ClinicalLists);

impl Fitted for FittedRules {
    fn predict(&self, view: &TaskView, index: usize) -> Result<u8> {
        Ok(rule_based_classify(&self.0, &view.records[index], view.task, &view.upstream[index]))
    }
}

impl Classifier for RuleBased {
    fn name(&self) -> &str {
        "RuleBased"
    }

    fn fit(&self, _: &TaskView, _: &[usize], _: &[u8], _: u64) -> Result<Box<dyn Fitted>> {
        Ok(Box::new(FittedRules(self.lists.clone())))
    }
}

/// Predicts 0 for every record.
pub struct AllNegative;

struct Constant(u8);

impl Fitted for Constant {
    fn predict(&self, _: &TaskView, _: usize) -> Result<u8> {
        Ok(self.0)
    }
}

impl Classifier for AllNegative {
    fn name(&self) -> &str {
        "AllNegative"
    }

    fn fit(&self, _: &TaskView, _: &[usize], _: &[u8], _: u64) -> Result<Box<dyn Fitted>> {
        Ok(Box::new(Constant(0)))
    }
}

/// Predicts a fixed class; used when labels are too degenerate to train.
pub(crate) fn constant_predictor(label: u8) -> Box<dyn Fitted> {
    Box::new(Constant(label))
}
