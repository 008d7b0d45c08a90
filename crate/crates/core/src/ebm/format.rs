//! Versioned JSON model format.
//!
//! ```json
//! {
//!   "format": "xlabel-ebm",
//!   "version": 1,
//!   "intercept": -2.31,
//!   "features": [
//!     { "name": "DM_key", "cuts": [0.5], "scores": [-0.8, 1.9, 0.0] }
//!   ],
//!   "config": { "max_bins": 3, "learning_rate": 0.05, "n_rounds": 500,
//!               "early_stop_patience": 50, "seed": 7 }
//! }
//! ```
//!
//! `scores` has one entry per value bin (`cuts.len() + 1` of them) followed
//! by the score of the MISSING bin. Floats are written in shortest
//! round-trip form, so a decoded model reproduces every score bit-exactly.

use serde::{Deserialize, Serialize};

use super::{BinMap, EbmModel, FeatureBins, ShapeFunction, TrainConfig};
use crate::error::{Result, XlabelError};

pub const MODEL_FORMAT: &str = "xlabel-ebm";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    intercept: f64,
    features: Vec<FeatureDoc>,
    config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    name: String,
    cuts: Vec<f64>,
    scores: Vec<f64>,
}

impl EbmModel {
    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            intercept: self.intercept,
            features: self
                .feature_names
                .iter()
                .zip(&self.bin_map.features)
                .zip(&self.shapes)
                .map(|((name, fb), shape)| FeatureDoc {
                    name: name.clone(),
                    cuts: fb.cuts.clone(),
                    scores: shape.scores.clone(),
                })
                .collect(),
            config: self.config.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    pub fn serialize(&self) -> Vec<u8> {
        self.to_json().into_bytes()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let doc: ModelDoc =
            serde_json::from_slice(bytes).map_err(|e| XlabelError::Deserialize(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(XlabelError::Deserialize(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(XlabelError::Deserialize(format!(
                "unsupported version {} (expected {MODEL_FORMAT_VERSION})",
                doc.version
            )));
        }
        let mut names = Vec::with_capacity(doc.features.len());
        let mut bins = Vec::with_capacity(doc.features.len());
        let mut shapes = Vec::with_capacity(doc.features.len());
        for f in doc.features {
            names.push(f.name);
            bins.push(FeatureBins::new(f.cuts).map_err(|e| XlabelError::Deserialize(e.to_string()))?);
            shapes.push(ShapeFunction { scores: f.scores });
        }
        doc.config
            .validate()
            .map_err(|e| XlabelError::Deserialize(e.to_string()))?;
        EbmModel::from_parts(doc.intercept, names, BinMap { features: bins }, shapes, doc.config)
            .map_err(|e| XlabelError::Deserialize(e.to_string()))
    }
}
