use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classifier::constant_predictor;
use super::{derive_seed, Classifier, Fitted};
use crate::error::{Result, XlabelError};
use crate::labeling::{confidence_from_proba, select_least_confident, SamplingMethod};
use crate::ncd::{Task, TaskView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub initial_fraction: f64,
    pub batch_size: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Reveal the least-confident remaining records instead of a uniform
    /// random batch, as the live tool does.
    pub confidence_batches: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            initial_fraction: 0.05,
            batch_size: 20,
            repetitions: 50,
            seed: 0,
            confidence_batches: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_fraction > 0.0 && self.initial_fraction < 1.0) {
            return Err(XlabelError::invalid("initial_fraction must lie in (0, 1)"));
        }
        if self.batch_size == 0 || self.repetitions == 0 {
            return Err(XlabelError::invalid("batch_size and repetitions must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalFlipsReport {
    pub task: Task,
    pub model: String,
    pub records: usize,
    pub initial_count: usize,
    /// Flips of the all-negative baseline (the number of positives).
    pub baseline_flips: usize,
    pub total_flips: Vec<usize>,
    /// Steps per repetition where the revealed labels held a single class.
    pub degenerate_steps: Vec<usize>,
    /// Unit-width histogram: value → number of repetitions.
    pub histogram: BTreeMap<usize, usize>,
    pub median: f64,
    pub mean: f64,
}

/// Flips needed when every record is labeled negative: the positive count.
pub fn all_negative_baseline(labels: &[u8]) -> usize {
    labels.iter().filter(|&&y| y == 1).count()
}

pub(crate) fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Simulate the labeling loop: reveal a random initial fraction, then
/// repeatedly train on the revealed labels, reveal the next batch and count
/// the model's wrong predictions on it. TotalFlips is the sum over batches.
///
/// When the revealed labels contain a single class the model cannot be
/// trained and the batch is predicted as that majority class.
pub fn simulate_totalflips(
    view: &TaskView,
    classifier: &dyn Classifier,
    config: &SimConfig,
) -> Result<TotalFlipsReport> {
    config.validate()?;
    let n = view.len();
    if n < 2 {
        return Err(XlabelError::invalid("need at least two records"));
    }
    let positives = all_negative_baseline(&view.labels);
    if positives == 0 || positives == n {
        return Err(XlabelError::DegenerateLabels);
    }
    let initial_count = ((config.initial_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut total_flips = Vec::with_capacity(config.repetitions);
    let mut degenerate_steps = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let rep_seed = derive_seed(config.seed, &[rep as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut revealed: Vec<usize> = order[..initial_count].to_vec();
        let mut remaining: Vec<usize> = order[initial_count..].to_vec();

        let mut flips = 0usize;
        let mut degenerate = 0usize;
        let mut step = 0u64;
        while !remaining.is_empty() {
            let labels: Vec<u8> = revealed.iter().map(|&i| view.labels[i]).collect();
            let pos = all_negative_baseline(&labels);
            let model: Box<dyn Fitted> = if pos == 0 || pos == labels.len() {
                degenerate += 1;
                constant_predictor(u8::from(pos * 2 > labels.len()))
            } else {
                classifier.fit(view, &revealed, &labels, derive_seed(rep_seed, &[step]))?
            };

            let take = config.batch_size.min(remaining.len());
            let batch: Vec<usize> = if config.confidence_batches {
                let scored: Vec<(usize, f64)> = remaining
                    .iter()
                    .map(|&i| (i, model.proba(view, i).map_or(1.0, confidence_from_proba)))
                    .collect();
                select_least_confident(&scored, SamplingMethod::NLeast(take))
            } else {
                remaining[..take].to_vec()
            };
            for &i in &batch {
                if model.predict(view, i)? != view.labels[i] {
                    flips += 1;
                }
            }
            remaining.retain(|i| !batch.contains(i));
            revealed.extend(batch);
            step += 1;
        }
        total_flips.push(flips);
        degenerate_steps.push(degenerate);
    }

    let mut histogram = BTreeMap::new();
    for &f in &total_flips {
        *histogram.entry(f).or_insert(0) += 1;
    }
    let mean = total_flips.iter().sum::<usize>() as f64 / total_flips.len() as f64;
    Ok(TotalFlipsReport {
        task: view.task,
        model: classifier.name().to_string(),
        records: n,
        initial_count,
        baseline_flips: positives,
        median: median(&total_flips),
        mean,
        total_flips,
        degenerate_steps,
        histogram,
    })
}
