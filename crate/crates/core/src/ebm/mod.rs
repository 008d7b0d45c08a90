//! Explainable boosting machine: an additive logistic model whose per-feature
//! terms are piecewise-constant shape functions over quantile bins.
//!
//! The raw score of a record is `intercept + Σ shape_i(x_i)`, the probability
//! is its logistic, and each `shape_i(x_i)` is directly readable as the
//! contribution of feature `i`. Interaction terms are not modelled.

mod binning;
mod format;
mod model;
mod train;

pub use binning::{build_bins, BinMap, FeatureBins};
pub use format::{MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use model::{logistic, EbmModel, ShapeFunction};
pub use train::{fit, log_loss, TrainConfig};

use serde::{Deserialize, Serialize};

/// One record's feature readings in schema order. `None` is MISSING.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<Option<f64>>);

impl FeatureVector {
    pub fn new(values: Vec<Option<f64>>) -> Self {
        FeatureVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.0.get(i).copied().flatten()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.0
    }
}

impl From<Vec<Option<f64>>> for FeatureVector {
    fn from(v: Vec<Option<f64>>) -> Self {
        FeatureVector(v)
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v.into_iter().map(Some).collect())
    }
}
