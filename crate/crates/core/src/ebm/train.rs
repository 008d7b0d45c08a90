use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_bins, logistic, EbmModel, FeatureVector, ShapeFunction};
use crate::error::{Result, XlabelError};

/// Fraction of the training data held out for early stopping.
const HOLDOUT_FRACTION: f64 = 0.15;
/// Bounds the per-bin Newton step of nearly pure bins (before shrinkage).
const MAX_NEWTON_STEP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_bins: usize,
    pub learning_rate: f64,
    pub n_rounds: usize,
    /// Rounds without holdout improvement before stopping. 0 disables early
    /// stopping and trains on all records for `n_rounds`.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_bins: 3,
            learning_rate: 0.05,
            n_rounds: 500,
            early_stop_patience: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_bins < 2 {
            return Err(XlabelError::invalid("max_bins must be at least 2"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(XlabelError::invalid("learning_rate must be positive"));
        }
        if self.n_rounds == 0 {
            return Err(XlabelError::invalid("n_rounds must be positive"));
        }
        Ok(())
    }
}

/// Mean binary cross-entropy of `model` on the given records.
pub fn log_loss(model: &EbmModel, data: &[FeatureVector], labels: &[u8]) -> Result<f64> {
    if data.len() != labels.len() || data.is_empty() {
        return Err(XlabelError::invalid("data and labels must be non-empty and equally long"));
    }
    let mut total = 0.0;
    for (x, &y) in data.iter().zip(labels) {
        total += pointwise_loss(model.raw_score(x)?, y == 1);
    }
    Ok(total / data.len() as f64)
}

/// `log(1 + e^{-z})` for positives, `log(1 + e^{z})` for negatives.
fn pointwise_loss(score: f64, positive: bool) -> f64 {
    let z = if positive { score } else { -score };
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// Distinct bin patterns with their record and positive counts. Records
/// that share a pattern are indistinguishable to an additive binned model,
/// so boosting runs over patterns instead of records.
struct PatternSet {
    width: usize,
    bins: Vec<usize>,
    count: Vec<f64>,
    positives: Vec<f64>,
    scores: Vec<f64>,
}

impl PatternSet {
    fn build(rows: &[Vec<usize>], labels: &[u8], members: &[usize], width: usize) -> Self {
        let mut index: HashMap<&[usize], usize> = HashMap::new();
        let mut set = PatternSet {
            width,
            bins: Vec::new(),
            count: Vec::new(),
            positives: Vec::new(),
            scores: Vec::new(),
        };
        for &r in members {
            let row = rows[r].as_slice();
            let slot = *index.entry(row).or_insert_with(|| {
                set.bins.extend_from_slice(row);
                set.count.push(0.0);
                set.positives.push(0.0);
                set.count.len() - 1
            });
            set.count[slot] += 1.0;
            set.positives[slot] += f64::from(labels[r]);
        }
        set.scores = vec![0.0; set.count.len()];
        set
    }

    fn len(&self) -> usize {
        self.count.len()
    }

    fn bin(&self, pattern: usize, feature: usize) -> usize {
        self.bins[pattern * self.width + feature]
    }

    fn apply(&mut self, feature: usize, delta: &[f64]) {
        for p in 0..self.len() {
            let b = self.bin(p, feature);
            self.scores[p] += delta[b];
        }
    }

    fn loss(&self) -> f64 {
        let mut total = 0.0;
        let mut n = 0.0;
        for p in 0..self.len() {
            let s = self.scores[p];
            let pos = self.positives[p];
            let neg = self.count[p] - pos;
            total += pos * pointwise_loss(s, true) + neg * pointwise_loss(s, false);
            n += self.count[p];
        }
        total / n
    }
}

/// Train an additive model by cyclic boosting of per-feature shape functions.
///
/// Each round visits the features in schema order and adds to the visited
/// feature's shape a shrunken per-bin Newton step on the logistic loss
/// (a depth-one regression tree on the binned feature). With a positive
/// `early_stop_patience`, a stratified holdout slice selects the best round.
/// Shapes are finally mean-centred over `data` and the means folded into
/// the intercept.
pub fn fit<S: AsRef<str>>(
    feature_names: &[S],
    data: &[FeatureVector],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<EbmModel> {
    config.validate()?;
    if data.len() != labels.len() {
        return Err(XlabelError::invalid(format!(
            "{} records but {} labels",
            data.len(),
            labels.len()
        )));
    }
    if data.len() < 2 {
        return Err(XlabelError::invalid("at least two records are required"));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(XlabelError::invalid("labels must be 0 or 1"));
    }
    let width = feature_names.len();
    if let Some(bad) = data.iter().position(|x| x.len() != width) {
        return Err(XlabelError::invalid(format!(
            "record {bad} has {} features, expected {width}",
            data[bad].len()
        )));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(XlabelError::DegenerateLabels);
    }

    let bin_map = build_bins(data, config.max_bins)?;
    let rows: Vec<Vec<usize>> = data.iter().map(|x| bin_map.bin_row(x)).collect();
    let (train_idx, holdout_idx) = split_holdout(labels, config);

    let mut train = PatternSet::build(&rows, labels, &train_idx, width);
    let mut holdout = (!holdout_idx.is_empty())
        .then(|| PatternSet::build(&rows, labels, &holdout_idx, width));

    let train_pos: f64 = train.positives.iter().sum();
    let train_n: f64 = train.count.iter().sum();
    let base = (train_pos / (train_n - train_pos)).ln();
    train.scores.iter_mut().for_each(|s| *s = base);
    if let Some(h) = holdout.as_mut() {
        h.scores.iter_mut().for_each(|s| *s = base);
    }

    let mut shapes: Vec<ShapeFunction> = bin_map
        .features
        .iter()
        .map(|fb| ShapeFunction::zeros(fb.n_bins()))
        .collect();
    let mut best: Option<(f64, usize, Vec<ShapeFunction>)> = None;

    let mut grad = Vec::new();
    let mut hess = Vec::new();
    let mut delta = Vec::new();
    for round in 0..config.n_rounds {
        for (j, shape) in shapes.iter_mut().enumerate() {
            let n_bins = shape.scores.len();
            grad.clear();
            grad.resize(n_bins, 0.0);
            hess.clear();
            hess.resize(n_bins, 0.0);
            for p in 0..train.len() {
                let prob = logistic(train.scores[p]);
                let b = train.bin(p, j);
                grad[b] += train.positives[p] - train.count[p] * prob;
                hess[b] += train.count[p] * prob * (1.0 - prob);
            }
            delta.clear();
            delta.extend(grad.iter().zip(&hess).map(|(&g, &h)| {
                if h > 1e-12 {
                    config.learning_rate * (g / h).clamp(-MAX_NEWTON_STEP, MAX_NEWTON_STEP)
                } else {
                    0.0
                }
            }));
            for (s, d) in shape.scores.iter_mut().zip(&delta) {
                *s += d;
            }
            train.apply(j, &delta);
            if let Some(h) = holdout.as_mut() {
                h.apply(j, &delta);
            }
        }

        if let Some(h) = holdout.as_ref() {
            let loss = h.loss();
            match &best {
                Some((best_loss, _, _)) if loss >= *best_loss => {}
                _ => best = Some((loss, round, shapes.clone())),
            }
            let best_round = best.as_ref().map_or(round, |b| b.1);
            if round - best_round >= config.early_stop_patience {
                break;
            }
        }
    }
    if let Some((_, _, best_shapes)) = best {
        shapes = best_shapes;
    }

    // Centre each shape over the full training distribution.
    let mut intercept = base;
    let n = data.len() as f64;
    for (j, shape) in shapes.iter_mut().enumerate() {
        let mut occupancy = vec![0.0; shape.scores.len()];
        for row in &rows {
            occupancy[row[j]] += 1.0;
        }
        let mean = shape
            .scores
            .iter()
            .zip(&occupancy)
            .map(|(s, c)| s * c)
            .sum::<f64>()
            / n;
        shape.scores.iter_mut().for_each(|s| *s -= mean);
        intercept += mean;
    }

    EbmModel::from_parts(
        intercept,
        feature_names.iter().map(|s| s.as_ref().to_string()).collect(),
        bin_map,
        shapes,
        config.clone(),
    )
}

/// Stratified holdout: `floor(HOLDOUT_FRACTION * class_count)` records of
/// each class, so the training part always keeps both classes.
fn split_holdout(labels: &[u8], config: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let all: Vec<usize> = (0..labels.len()).collect();
    if config.early_stop_patience == 0 {
        return (all, Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut holdout = Vec::new();
    for class in [0u8, 1] {
        let mut members: Vec<usize> = all.iter().copied().filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let take = (HOLDOUT_FRACTION * members.len() as f64).floor() as usize;
        holdout.extend_from_slice(&members[..take]);
    }
    if holdout.is_empty() {
        return (all, Vec::new());
    }
    holdout.sort_unstable();
    let mut in_holdout = vec![false; labels.len()];
    holdout.iter().for_each(|&i| in_holdout[i] = true);
    let train = all.into_iter().filter(|&i| !in_holdout[i]).collect();
    (train, holdout)
}
