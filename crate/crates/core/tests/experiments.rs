use xlabel_core::ebm::{FeatureVector, TrainConfig};
use xlabel_core::experiments::{
    all_negative_baseline, flipped_accuracy, kfold_cv, label_noise_eval, simulate_totalflips, AllNegative,
    Classifier, Fitted, MetricSet, ModelKind, SimConfig,
};
use xlabel_core::ncd::{synth_dataset, synth_generate, ClinicalLists, RawRecord, SynthConfig, Task, TaskView, Upstream};
use xlabel_core::Result;

/// One binary flag equal to the label; separable by construction.
fn flag_view(n: usize, positives: usize) -> TaskView {
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % (n / positives) == 0 && i / (n / positives) < positives)).collect();
    TaskView {
        task: Task::Dm,
        feature_names: vec!["flag".into()],
        features: labels.iter().map(|&y| FeatureVector::from(vec![f64::from(y)])).collect(),
        labels,
        records: (0..n).map(|i| RawRecord { id: format!("r{i}"), ..Default::default() }).collect(),
        upstream: vec![Upstream::new(); n],
    }
}

/// Predicts the flag feature directly: a consistent classifier.
struct FlagOracle;
struct FlagFitted;

impl Fitted for FlagFitted {
    fn predict(&self, view: &TaskView, index: usize) -> Result<u8> {
        Ok(view.features[index].get(0).unwrap() as u8)
    }
}

impl Classifier for FlagOracle {
    fn name(&self) -> &str {
        "FlagOracle"
    }
    fn fit(&self, _: &TaskView, _: &[usize], _: &[u8], _: u64) -> Result<Box<dyn Fitted>> {
        Ok(Box::new(FlagFitted))
    }
}

fn ebm() -> Box<dyn Classifier> {
    ModelKind::Ebm.classifier(&ClinicalLists::default(), &TrainConfig::default())
}

#[test]
fn separable_data_needs_few_flips() {
    let view = flag_view(400, 40);
    let cfg = SimConfig { repetitions: 10, seed: 3, ..Default::default() };
    let report = simulate_totalflips(&view, &*ebm(), &cfg).unwrap();
    // the consistent-classifier loop makes zero errors once both classes
    // were revealed; EBM may only err while the revealed set is one-class
    for (&f, &d) in report.total_flips.iter().zip(&report.degenerate_steps) {
        assert!(f <= d * cfg.batch_size, "{f} flips with {d} degenerate steps");
        assert!(f < 40 / 2);
    }
    let oracle = simulate_totalflips(&view, &FlagOracle, &cfg).unwrap();
    for (&f, &d) in oracle.total_flips.iter().zip(&oracle.degenerate_steps) {
        if d == 0 {
            assert_eq!(f, 0);
        }
        assert!(f <= d * cfg.batch_size);
    }
    assert_eq!(report.histogram.values().sum::<usize>(), 10);
}

#[test]
fn one_batch_collapses_to_initial_model_errors() {
    let view = flag_view(100, 10);
    let cfg = SimConfig { repetitions: 5, batch_size: 1000, seed: 1, ..Default::default() };
    let report = simulate_totalflips(&view, &AllNegative, &cfg).unwrap();
    assert_eq!(report.initial_count, 5);
    // all-negative model on the remaining 95 records: errors = positives left
    for f in &report.total_flips {
        assert!(*f <= 10);
    }
    let mean_expected = 10.0 * 95.0 / 100.0;
    assert!((report.mean - mean_expected).abs() < 3.0);
}

#[test]
fn totalflips_respects_bounds_and_seed() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 4, n_records: 300, flag_noise: 0.1, ..Default::default() }, &lists).unwrap();
    let view = TaskView::from_dataset(&ds, Task::Htn, &lists).unwrap();
    let cfg = SimConfig { repetitions: 4, seed: 77, ..Default::default() };
    let a = simulate_totalflips(&view, &*ebm(), &cfg).unwrap();
    let b = simulate_totalflips(&view, &*ebm(), &cfg).unwrap();
    assert_eq!(a, b);
    for &f in &a.total_flips {
        assert!(f <= view.len() - a.initial_count);
    }
    let c = simulate_totalflips(&view, &*ebm(), &SimConfig { confidence_batches: true, ..cfg }).unwrap();
    assert_eq!(c.total_flips.len(), 4);
}

#[test]
fn baseline_matches_generator_counts() {
    let lists = ClinicalLists::default();
    let (_, truth) = synth_generate(&SynthConfig { seed: 9, ..Default::default() }, &lists).unwrap();
    for t in Task::CHAIN {
        let labels: Vec<u8> = truth.iter().map(|r| r[t.index()]).collect();
        let planted = [72, 139, 52, 77][t.index()];
        assert_eq!(all_negative_baseline(&labels), planted);
    }
    assert_eq!(all_negative_baseline(&[0; 10]), 0);
}

#[test]
fn cv_all_negative_and_perfect_models() {
    let view = flag_view(200, 20);
    let neg = kfold_cv(&view, 5, &AllNegative, 1).unwrap();
    for f in &neg.folds {
        let m = f.metrics.unwrap();
        assert_eq!((m.recall, m.f1), (0.0, 0.0));
        assert!((m.accuracy - 0.9).abs() < 1e-12);
    }
    let perfect = kfold_cv(&view, 5, &FlagOracle, 1).unwrap();
    for f in &perfect.folds {
        assert_eq!(f.metrics.unwrap(), MetricSet { f1: 1.0, accuracy: 1.0, precision: 1.0, recall: 1.0 });
    }
    let trained = kfold_cv(&view, 5, &*ebm(), 1).unwrap();
    assert_eq!(trained.mean.f1, 1.0);
    assert_eq!(trained.sd.f1, 0.0);
}

#[test]
fn cv_metric_identities_and_reproducibility() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 2, flag_noise: 0.1, ..Default::default() }, &lists).unwrap();
    let view = TaskView::from_dataset(&ds, Task::Ckd, &lists).unwrap();
    let a = kfold_cv(&view, 5, &*ebm(), 10).unwrap();
    assert_eq!(a, kfold_cv(&view, 5, &*ebm(), 10).unwrap());
    let total: usize = a.folds.iter().map(|f| f.confusion.total()).sum();
    assert_eq!(total, view.len());
    for f in &a.folds {
        let m = f.metrics.unwrap();
        let c = f.confusion;
        assert!((m.accuracy - (c.tp + c.tn) as f64 / c.total() as f64).abs() < 1e-12);
        if m.precision + m.recall > 0.0 {
            assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-12);
        }
        assert!(m.as_array().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn cv_flags_degenerate_training_splits() {
    // a single positive: the fold that holds it trains on negatives only
    let view = flag_view(50, 1);
    let report = kfold_cv(&view, 5, &*ebm(), 0).unwrap();
    assert_eq!(report.folds.iter().filter(|f| f.degenerate).count(), 1);
    assert_eq!(report.folds.iter().filter(|f| f.metrics.is_some()).count(), 4);
    assert!(kfold_cv(&view, 1, &*ebm(), 0).is_err());
    assert!(kfold_cv(&flag_view(4, 1), 5, &*ebm(), 0).is_err());
}

#[test]
fn noise_levels_with_nothing_to_flip_are_skipped() {
    let view = flag_view(10, 5);
    let report = label_noise_eval(&view, &[0.05, 0.3], 2, &AllNegative, 0).unwrap();
    assert!(report.levels[0].skipped);
    assert_eq!(report.levels[1].flipped, 3);
    assert_eq!(report.levels[1].accuracies.len(), 2);
}

#[test]
fn majority_model_accuracy_is_the_true_majority_share_of_flipped_records() {
    // 10 records, 3 positives (indices 0, 3, 6)
    let view = flag_view(10, 3);
    assert_eq!(view.positives(), 3);
    // flipped set = the whole minority class plus one negative
    let flipped = [0, 3, 6, 1];
    let acc = flipped_accuracy(&view, &AllNegative, &flipped, 0).unwrap();
    let negatives_in_flipped = flipped.iter().filter(|&&i| view.labels[i] == 0).count();
    assert!((acc - negatives_in_flipped as f64 / flipped.len() as f64).abs() < 1e-15);
    assert!((acc - 0.25).abs() < 1e-15);
}

#[test]
fn rule_based_ignores_label_noise() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 6, n_records: 400, ..Default::default() }, &lists).unwrap();
    let view = TaskView::from_dataset(&ds, Task::Dlp, &lists).unwrap();
    let rules = ModelKind::RuleBased.classifier(&lists, &TrainConfig::default());
    let report = label_noise_eval(&view, &[0.1, 0.3, 0.5], 3, &*rules, 4).unwrap();
    for l in &report.levels {
        assert_eq!(l.mean_accuracy, 1.0);
    }
    // predictions are identical whatever labels are supplied
    let all: Vec<usize> = (0..view.len()).collect();
    let a = rules.fit(&view, &all, &view.labels, 0).unwrap();
    let flipped: Vec<u8> = view.labels.iter().map(|y| 1 - y).collect();
    let b = rules.fit(&view, &all, &flipped, 1).unwrap();
    for i in 0..view.len() {
        assert_eq!(a.predict(&view, i).unwrap(), b.predict(&view, i).unwrap());
    }
}

#[test]
fn noise_eval_is_seeded() {
    let view = flag_view(100, 20);
    let a = label_noise_eval(&view, &[0.2], 3, &*ebm(), 5).unwrap();
    let b = label_noise_eval(&view, &[0.2], 3, &*ebm(), 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reports_are_written_as_csv_and_json() {
    use xlabel_core::experiments::report::{write_cv, write_noise, write_totalflips};
    let dir = tempfile::tempdir().unwrap();
    let view = flag_view(100, 10);
    let tf = simulate_totalflips(&view, &AllNegative, &SimConfig { repetitions: 3, ..Default::default() }).unwrap();
    let cv = kfold_cv(&view, 5, &AllNegative, 0).unwrap();
    let noise = label_noise_eval(&view, &[0.005, 0.2], 2, &AllNegative, 0).unwrap();
    let mut files = write_totalflips(dir.path(), &tf).unwrap();
    files.extend(write_cv(dir.path(), std::slice::from_ref(&cv)).unwrap());
    files.extend(write_noise(dir.path(), std::slice::from_ref(&noise)).unwrap());
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["totalflips_DM.csv", "totalflips_DM.json", "cv_DM.csv", "cv_DM.json", "noise_DM.csv", "noise_DM.json"]);

    let tf_csv = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(tf_csv.lines().count(), 4);
    let cv_csv = std::fs::read_to_string(&files[2]).unwrap();
    assert_eq!(cv_csv.lines().count(), 6);
    // the skipped level contributes no rows
    let noise_csv = std::fs::read_to_string(&files[4]).unwrap();
    assert_eq!(noise_csv.lines().count(), 3);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&files[1]).unwrap()).unwrap();
    assert_eq!(json["total_flips"].as_array().unwrap().len(), 3);
}
