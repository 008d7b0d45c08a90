use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BinMap, FeatureBins, FeatureVector, TrainConfig};
use crate::error::{Result, XlabelError};

/// Numerically stable logistic function.
///
/// Sign-consistent: the result is `>= 0.5` exactly when `z >= 0`, even for
/// `|z|` below the resolution of `exp` around zero.
pub fn logistic(z: f64) -> f64 {
    const JUST_ABOVE_HALF: f64 = 0.500_000_000_000_000_1;
    const JUST_BELOW_HALF: f64 = 0.499_999_999_999_999_94;
    if z == 0.0 {
        0.5
    } else if z > 0.0 {
        (1.0 / (1.0 + (-z).exp())).max(JUST_ABOVE_HALF)
    } else {
        let e = z.exp();
        (e / (1.0 + e)).min(JUST_BELOW_HALF)
    }
}

/// Piecewise-constant additive term of one feature, one score per bin
/// (value bins first, MISSING bin last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub scores: Vec<f64>,
}

impl ShapeFunction {
    pub fn zeros(n_bins: usize) -> Self {
        ShapeFunction {
            scores: vec![0.0; n_bins],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbmModel {
    pub(crate) intercept: f64,
    pub(crate) shapes: Vec<ShapeFunction>,
    pub(crate) bin_map: BinMap,
    pub(crate) feature_names: Arc<[String]>,
    pub(crate) config: TrainConfig,
}

impl EbmModel {
    /// Assemble a model from parts. Every shape must have exactly one score
    /// per bin of its feature.
    pub fn from_parts(
        intercept: f64,
        feature_names: Vec<String>,
        bin_map: BinMap,
        shapes: Vec<ShapeFunction>,
        config: TrainConfig,
    ) -> Result<Self> {
        if feature_names.len() != bin_map.n_features() || shapes.len() != bin_map.n_features() {
            return Err(XlabelError::invalid(format!(
                "{} names, {} bin maps and {} shapes do not line up",
                feature_names.len(),
                bin_map.n_features(),
                shapes.len()
            )));
        }
        for (i, (fb, shape)) in bin_map.features.iter().zip(&shapes).enumerate() {
            FeatureBins::new(fb.cuts.clone())?;
            if shape.scores.len() != fb.n_bins() {
                return Err(XlabelError::invalid(format!(
                    "feature {i} has {} bins but {} scores",
                    fb.n_bins(),
                    shape.scores.len()
                )));
            }
            if shape.scores.iter().any(|s| !s.is_finite()) {
                return Err(XlabelError::invalid(format!("feature {i} has a non-finite score")));
            }
        }
        if !intercept.is_finite() {
            return Err(XlabelError::invalid("intercept must be finite"));
        }
        Ok(EbmModel {
            intercept,
            shapes,
            bin_map,
            feature_names: feature_names.into(),
            config,
        })
    }

    /// Intercept-only model over the given bins (all shapes zero).
    pub fn constant(intercept: f64, feature_names: Vec<String>, bin_map: BinMap) -> Result<Self> {
        let shapes = bin_map
            .features
            .iter()
            .map(|fb| ShapeFunction::zeros(fb.n_bins()))
            .collect();
        Self::from_parts(intercept, feature_names, bin_map, shapes, TrainConfig::default())
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn shapes(&self) -> &[ShapeFunction] {
        &self.shapes
    }

    pub fn bin_map(&self) -> &BinMap {
        &self.bin_map
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.shapes.len()
    }

    fn check_arity(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(XlabelError::invalid(format!(
                "record has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    fn shape_value(&self, feature: usize, value: Option<f64>) -> f64 {
        let bin = self.bin_map.features[feature].bin_of(value);
        self.shapes[feature].scores[bin]
    }

    /// `f_i(x_i)` for every feature, in schema order.
    pub fn contribution_values(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.check_arity(x)?;
        Ok(x.values()
            .iter()
            .enumerate()
            .map(|(i, v)| self.shape_value(i, *v))
            .collect())
    }

    /// Intercept plus the sum of contributions, accumulated in schema order.
    pub fn raw_score(&self, x: &FeatureVector) -> Result<f64> {
        let contributions = self.contribution_values(x)?;
        Ok(contributions.iter().fold(self.intercept, |acc, c| acc + c))
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        Ok(logistic(self.raw_score(x)?))
    }

    /// 1 iff the probability is at least one half (equivalently, the raw
    /// score is non-negative).
    pub fn predict_label(&self, x: &FeatureVector) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= 0.5))
    }

    pub fn contributions(&self, x: &FeatureVector) -> Result<Vec<(String, f64)>> {
        Ok(self
            .feature_names
            .iter()
            .cloned()
            .zip(self.contribution_values(x)?)
            .collect())
    }

    /// Logistic of each contribution: 0.5 is neutral, towards 1 pushes to
    /// the positive class, towards 0 to the negative class.
    pub fn heat(&self, x: &FeatureVector) -> Result<Vec<(String, f64)>> {
        Ok(self
            .contributions(x)?
            .into_iter()
            .map(|(name, c)| (name, logistic(c)))
            .collect())
    }
}
