use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, Classifier, Confusion, MetricSet};
use crate::error::{Result, XlabelError};
use crate::ncd::{Task, TaskView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_size: usize,
    pub confusion: Confusion,
    /// `None` when the training split lacked a class.
    pub metrics: Option<MetricSet>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub task: Task,
    pub model: String,
    pub k: usize,
    pub folds: Vec<FoldResult>,
    /// Mean and sample standard deviation over non-degenerate folds.
    pub mean: MetricSet,
    pub sd: MetricSet,
}

/// Assign every record to one of `k` folds, dealing each class's shuffled
/// members round-robin so class ratios are preserved.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in [1u8, 0] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (j, i) in members.into_iter().enumerate() {
            folds[(offset + j) % k].push(i);
        }
        offset += labels.iter().filter(|&&y| y == class).count();
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

pub fn kfold_cv(view: &TaskView, k: usize, classifier: &dyn Classifier, seed: u64) -> Result<CvReport> {
    if k < 2 {
        return Err(XlabelError::invalid("k must be at least 2"));
    }
    if view.len() < k {
        return Err(XlabelError::invalid(format!("{} records cannot fill {k} folds", view.len())));
    }
    let folds = stratified_folds(&view.labels, k, seed);
    let mut results = Vec::with_capacity(k);
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let labels: Vec<u8> = train.iter().map(|&i| view.labels[i]).collect();
        let model = match classifier.fit(view, &train, &labels, derive_seed(seed, &[f as u64])) {
            Ok(m) => m,
            Err(XlabelError::DegenerateLabels) => {
                log::warn!("fold {f}: training split has a single class; excluded from the mean");
                results.push(FoldResult {
                    fold: f,
                    test_size: test.len(),
                    confusion: Confusion::default(),
                    metrics: None,
                    degenerate: true,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let truth: Vec<u8> = test.iter().map(|&i| view.labels[i]).collect();
        let pred = test
            .iter()
            .map(|&i| model.predict(view, i))
            .collect::<Result<Vec<u8>>>()?;
        let confusion = Confusion::from_pairs(&truth, &pred);
        results.push(FoldResult {
            fold: f,
            test_size: test.len(),
            confusion,
            metrics: Some(MetricSet::from_confusion(&confusion)),
            degenerate: false,
        });
    }

    let valid: Vec<[f64; 4]> = results.iter().filter_map(|r| r.metrics.map(|m| m.as_array())).collect();
    let mut mean = [0.0; 4];
    let mut sd = [0.0; 4];
    if !valid.is_empty() {
        for m in 0..4 {
            let n = valid.len() as f64;
            mean[m] = valid.iter().map(|v| v[m]).sum::<f64>() / n;
            if valid.len() > 1 {
                let ss: f64 = valid.iter().map(|v| (v[m] - mean[m]).powi(2)).sum();
                sd[m] = (ss / (n - 1.0)).sqrt();
            }
        }
    }
    Ok(CvReport {
        task: view.task,
        model: classifier.name().to_string(),
        k,
        folds: results,
        mean: MetricSet::from_array(mean),
        sd: MetricSet::from_array(sd),
    })
}
