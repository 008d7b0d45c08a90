//! Desk-scale reproductions of the labeling-effort, cross-validation and
//! label-noise experiments on a fully labeled task view.

mod classifier;
mod cv;
mod metrics;
mod noise;
pub mod report;
mod totalflips;

pub use classifier::{AllNegative, Classifier, EbmClassifier, Fitted, ModelKind, RuleBased};
pub use cv::{kfold_cv, stratified_folds, CvReport, FoldResult};
pub use metrics::{Confusion, MetricSet};
pub use noise::{default_noise_levels, flipped_accuracy, label_noise_eval, NoiseLevelResult, NoiseReport};
pub use totalflips::{all_negative_baseline, simulate_totalflips, SimConfig, TotalFlipsReport};

/// Derive an independent stream seed from a base seed and a path of indices
/// (SplitMix64 finaliser applied per component).
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}
