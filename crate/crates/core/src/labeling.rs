//! The interactive labeling cycle: confidence scoring, sampling of the
//! least-confident unlabeled records, detection of labeled records the
//! model disagrees with, application of human keep/flip decisions, and
//! retraining on the labeled part of the pool.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ebm::{fit, EbmModel, FeatureVector, TrainConfig};
use crate::error::{Result, XlabelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Imported,
}

/// `max{p, 1 - p}`: 0.5 when the model is least sure, 1 when most sure.
pub fn confidence_from_proba(p: f64) -> f64 {
    p.max(1.0 - p)
}

pub fn confidence(model: &EbmModel, x: &FeatureVector) -> Result<f64> {
    Ok(confidence_from_proba(model.predict_proba(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub p: f64,
    pub confidence: f64,
    pub pseudo_label: u8,
}

impl Confidence {
    pub fn from_proba(p: f64) -> Self {
        Confidence {
            p,
            confidence: confidence_from_proba(p),
            pseudo_label: u8::from(p >= 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "value", rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Every unlabeled record with confidence strictly below the threshold.
    Threshold(f64),
    /// The `n` least-confident unlabeled records.
    NLeast(usize),
}

impl SamplingMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingMethod::Threshold(t) if t > 0.5 && t <= 1.0 => Ok(()),
            SamplingMethod::Threshold(t) => Err(XlabelError::invalid(format!(
                "confidence threshold {t} outside (0.5, 1]"
            ))),
            SamplingMethod::NLeast(0) => Err(XlabelError::invalid("sample size must be positive")),
            SamplingMethod::NLeast(_) => Ok(()),
        }
    }
}

/// Order candidates by ascending confidence, ties by ascending index, and
/// apply the sampling policy.
pub fn select_least_confident(candidates: &[(usize, f64)], method: SamplingMethod) -> Vec<usize> {
    let mut pool: Vec<(usize, f64)> = match method {
        SamplingMethod::Threshold(t) => candidates.iter().copied().filter(|&(_, c)| c < t).collect(),
        SamplingMethod::NLeast(_) => candidates.to_vec(),
    };
    pool.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    if let SamplingMethod::NLeast(n) = method {
        pool.truncate(n);
    }
    pool.into_iter().map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub index: usize,
    pub stored: u8,
    pub suggested: u8,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "value", rename_all = "lowercase")]
pub enum Action {
    Keep,
    Flip,
    Set(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub index: usize,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionCounts {
    pub kept: usize,
    pub flipped: usize,
    pub set: usize,
}

/// Records of one task split into labeled (`X_L`) and unlabeled (`X_U`)
/// parts, with the provenance of every label and the pseudo-labels most
/// recently shown to the annotator.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStore {
    feature_names: Vec<String>,
    features: Vec<FeatureVector>,
    labels: Vec<Option<u8>>,
    provenance: Vec<Option<Provenance>>,
    presented: BTreeMap<usize, u8>,
}

impl LabelStore {
    pub fn new(feature_names: Vec<String>, features: Vec<FeatureVector>) -> Result<Self> {
        if let Some(bad) = features.iter().position(|x| x.len() != feature_names.len()) {
            return Err(XlabelError::invalid(format!(
                "record {bad} has {} features, expected {}",
                features[bad].len(),
                feature_names.len()
            )));
        }
        let n = features.len();
        Ok(LabelStore {
            feature_names,
            features,
            labels: vec![None; n],
            provenance: vec![None; n],
            presented: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn label(&self, index: usize) -> Option<u8> {
        self.labels.get(index).copied().flatten()
    }

    pub fn provenance(&self, index: usize) -> Option<Provenance> {
        self.provenance.get(index).copied().flatten()
    }

    pub fn labels(&self) -> &[Option<u8>] {
        &self.labels
    }

    /// Record an externally supplied label. HUMAN labels are left alone.
    pub fn import_label(&mut self, index: usize, label: u8) -> Result<bool> {
        self.check_index(index)?;
        if label > 1 {
            return Err(XlabelError::invalid(format!("label {label} is not 0 or 1")));
        }
        if self.provenance[index] == Some(Provenance::Human) {
            return Ok(false);
        }
        self.labels[index] = Some(label);
        self.provenance[index] = Some(Provenance::Imported);
        Ok(true)
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_none()).collect()
    }

    pub fn has_both_classes(&self) -> bool {
        let mut seen = [false; 2];
        for y in self.labels.iter().flatten() {
            seen[usize::from(*y)] = true;
        }
        seen[0] && seen[1]
    }

    pub fn presented(&self) -> &BTreeMap<usize, u8> {
        &self.presented
    }

    /// Replace the presented batch with the given records and the model's
    /// pseudo-labels for them.
    pub fn present(&mut self, indices: &[usize], model: &EbmModel) -> Result<()> {
        let mut presented = BTreeMap::new();
        for &i in indices {
            self.check_index(i)?;
            presented.insert(i, model.predict_label(&self.features[i])?);
        }
        self.presented = presented;
        Ok(())
    }

    /// Restore a presented batch verbatim (used when replaying persisted state).
    pub fn set_presented(&mut self, presented: BTreeMap<usize, u8>) -> Result<()> {
        for (&i, &y) in &presented {
            self.check_index(i)?;
            if y > 1 {
                return Err(XlabelError::invalid("pseudo-label must be 0 or 1"));
            }
        }
        self.presented = presented;
        Ok(())
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(XlabelError::invalid(format!(
                "record index {index} out of range (pool has {})",
                self.len()
            )));
        }
        Ok(())
    }

    /// Confidence report for every record, in index order.
    pub fn confidences(&self, model: &EbmModel) -> Result<Vec<Confidence>> {
        self.features
            .iter()
            .map(|x| Ok(Confidence::from_proba(model.predict_proba(x)?)))
            .collect()
    }

    /// Least-confident unlabeled records under `method`.
    pub fn sample(&self, model: &EbmModel, method: SamplingMethod) -> Result<Vec<usize>> {
        method.validate()?;
        let unlabeled = self.unlabeled_indices();
        if unlabeled.is_empty() {
            return Err(XlabelError::EmptyPool);
        }
        let candidates = unlabeled
            .into_iter()
            .map(|i| Ok((i, confidence(model, &self.features[i])?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(select_least_confident(&candidates, method))
    }

    /// Labeled records whose stored label differs from the model's
    /// pseudo-label, in index order.
    pub fn detect_mismatches(&self, model: &EbmModel) -> Result<Vec<Mismatch>> {
        let mut out = Vec::new();
        for i in self.labeled_indices() {
            let c = Confidence::from_proba(model.predict_proba(&self.features[i])?);
            let stored = self.labels[i].expect("labeled");
            if c.pseudo_label != stored {
                out.push(Mismatch {
                    index: i,
                    stored,
                    suggested: c.pseudo_label,
                    confidence: c.confidence,
                });
            }
        }
        Ok(out)
    }

    /// Apply human decisions. All decisions are validated before any is
    /// applied; on error the store is unchanged. Keep and flip act on the
    /// pseudo-label presented for that record.
    pub fn apply_labels(&mut self, decisions: &[Decision]) -> Result<DecisionCounts> {
        let mut resolved = Vec::with_capacity(decisions.len());
        for d in decisions {
            self.check_index(d.index)?;
            let value = match d.action {
                Action::Set(v) if v <= 1 => v,
                Action::Set(v) => return Err(XlabelError::invalid(format!("label {v} is not 0 or 1"))),
                Action::Keep | Action::Flip => {
                    let pseudo = *self.presented.get(&d.index).ok_or_else(|| {
                        XlabelError::Protocol(format!(
                            "record {} was not presented with a pseudo-label",
                            d.index
                        ))
                    })?;
                    if d.action == Action::Keep {
                        pseudo
                    } else {
                        1 - pseudo
                    }
                }
            };
            resolved.push((d.index, d.action, value));
        }
        let mut counts = DecisionCounts::default();
        for (index, action, value) in resolved {
            self.labels[index] = Some(value);
            self.provenance[index] = Some(Provenance::Human);
            match action {
                Action::Keep => counts.kept += 1,
                Action::Flip => counts.flipped += 1,
                Action::Set(_) => counts.set += 1,
            }
        }
        Ok(counts)
    }

    /// Fit a fresh model on `X_L`. The caller keeps its previous model
    /// until this returns.
    pub fn retrain(&self, config: &TrainConfig) -> Result<EbmModel> {
        let idx = self.labeled_indices();
        let data: Vec<FeatureVector> = idx.iter().map(|&i| self.features[i].clone()).collect();
        let labels: Vec<u8> = idx.iter().map(|&i| self.labels[i].expect("labeled")).collect();
        if labels.is_empty() {
            return Err(XlabelError::DegenerateLabels);
        }
        fit(&self.feature_names, &data, &labels, config)
    }
}
