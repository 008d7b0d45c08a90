use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, Classifier};
use crate::error::{Result, XlabelError};
use crate::ncd::{Task, TaskView};

/// 5%, 10%, …, 50%.
pub fn default_noise_levels() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelResult {
    pub level: f64,
    pub flipped: usize,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub task: Task,
    pub model: String,
    pub repeats: usize,
    pub levels: Vec<NoiseLevelResult>,
}

/// Flip the labels of `flipped`, train on the whole noisy label vector and
/// return the accuracy of the predictions on the flipped records against
/// their original labels.
pub fn flipped_accuracy(view: &TaskView, classifier: &dyn Classifier, flipped: &[usize], seed: u64) -> Result<f64> {
    if flipped.is_empty() {
        return Err(XlabelError::invalid("flipped set is empty"));
    }
    let mut noisy = view.labels.clone();
    for &i in flipped {
        noisy[i] = 1 - noisy[i];
    }
    let all: Vec<usize> = (0..view.len()).collect();
    let model = classifier.fit(view, &all, &noisy, seed)?;
    let mut correct = 0usize;
    for &i in flipped {
        if model.predict(view, i)? == view.labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / flipped.len() as f64)
}

pub fn label_noise_eval(
    view: &TaskView,
    levels: &[f64],
    repeats: usize,
    classifier: &dyn Classifier,
    seed: u64,
) -> Result<NoiseReport> {
    if repeats == 0 {
        return Err(XlabelError::invalid("repeats must be positive"));
    }
    if let Some(p) = levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(XlabelError::invalid(format!("noise level {p} outside [0, 1]")));
    }
    let n = view.len();
    let mut out = Vec::with_capacity(levels.len());
    for (li, &level) in levels.iter().enumerate() {
        // tolerance keeps e.g. 0.3 * 10 at 3
        let m = (level * n as f64 + 1e-9).floor() as usize;
        if m == 0 {
            log::warn!("noise level {level}: no record would be flipped; skipped");
            out.push(NoiseLevelResult {
                level,
                flipped: 0,
                accuracies: Vec::new(),
                mean_accuracy: f64::NAN,
                skipped: true,
            });
            continue;
        }
        let mut accuracies = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let s = derive_seed(seed, &[li as u64, r as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut flipped = sample(&mut rng, n, m).into_vec();
            flipped.sort_unstable();
            accuracies.push(flipped_accuracy(view, classifier, &flipped, s)?);
        }
        let mean_accuracy = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        out.push(NoiseLevelResult {
            level,
            flipped: m,
            accuracies,
            mean_accuracy,
            skipped: false,
        });
    }
    Ok(NoiseReport {
        task: view.task,
        model: classifier.name().to_string(),
        repeats,
        levels: out,
    })
}
