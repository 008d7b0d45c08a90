use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Result, XlabelError};

/// Cut points of one feature. Value bins are `0..=cuts.len()`; the MISSING
/// bin comes last at index `cuts.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub cuts: Vec<f64>,
}

impl FeatureBins {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.iter().any(|c| !c.is_finite()) {
            return Err(XlabelError::invalid("cut points must be finite"));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(XlabelError::invalid("cut points must be strictly increasing"));
        }
        Ok(FeatureBins { cuts })
    }

    /// Number of bins including the MISSING bin.
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 2
    }

    pub fn missing_bin(&self) -> usize {
        self.cuts.len() + 1
    }

    /// A value equal to a cut point belongs to the upper bin. NaN counts as MISSING.
    pub fn bin_of(&self, value: Option<f64>) -> usize {
        match value {
            Some(v) if !v.is_nan() => self.cuts.partition_point(|&c| c <= v),
            _ => self.missing_bin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMap {
    pub features: Vec<FeatureBins>,
}

impl BinMap {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn bin_row(&self, x: &FeatureVector) -> Vec<usize> {
        self.features
            .iter()
            .zip(x.values())
            .map(|(fb, v)| fb.bin_of(*v))
            .collect()
    }
}

/// Equal-frequency binning over the non-missing values of every feature.
///
/// Cuts are placed only between distinct observed values: for each target
/// quantile `k/max_bins` the closest distinct-value boundary is chosen, and
/// repeated choices collapse into a single cut. A binary feature therefore
/// always gets exactly one cut and a constant feature none.
pub fn build_bins(data: &[FeatureVector], max_bins: usize) -> Result<BinMap> {
    if data.is_empty() {
        return Err(XlabelError::invalid("cannot bin an empty dataset"));
    }
    if max_bins < 2 {
        return Err(XlabelError::invalid("max_bins must be at least 2"));
    }
    let width = data[0].len();
    if let Some(bad) = data.iter().position(|x| x.len() != width) {
        return Err(XlabelError::invalid(format!(
            "record {bad} has {} features, expected {width}",
            data[bad].len()
        )));
    }
    let features = (0..width)
        .map(|j| {
            let mut values: Vec<f64> = data
                .iter()
                .filter_map(|x| x.get(j))
                .filter(|v| !v.is_nan())
                .collect();
            values.sort_by(|a, b| a.total_cmp(b));
            FeatureBins {
                cuts: quantile_cuts(&values, max_bins),
            }
        })
        .collect();
    Ok(BinMap { features })
}

fn quantile_cuts(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let n = sorted.len();
    // (count of values strictly below the boundary, cut value)
    let mut boundaries: Vec<(usize, f64)> = Vec::new();
    for i in 1..n {
        if sorted[i] > sorted[i - 1] {
            boundaries.push((i, sorted[i - 1] + (sorted[i] - sorted[i - 1]) / 2.0));
        }
    }
    if boundaries.is_empty() {
        return Vec::new();
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let target = (k * n) as f64 / max_bins as f64;
        let best = boundaries
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (a.0 as f64 - target).abs();
                let db = (b.0 as f64 - target).abs();
                da.total_cmp(&db)
            })
            .map(|(idx, _)| idx)
            .expect("non-empty");
        if chosen.last() != Some(&best) {
            chosen.push(best);
        }
    }
    chosen.dedup();
    chosen.into_iter().map(|i| boundaries[i].1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Vec<FeatureVector> {
        values.iter().map(|&v| FeatureVector::from(vec![v])).collect()
    }

    #[test]
    fn binary_feature_gets_one_cut() {
        let mut vals = vec![0.0; 150];
        vals.extend(vec![1.0; 50]);
        let bins = build_bins(&column(&vals), 3).unwrap();
        assert_eq!(bins.features[0].cuts, vec![0.5]);
        assert_eq!(bins.features[0].n_bins(), 3);
    }

    #[test]
    fn constant_feature_gets_no_cut() {
        let bins = build_bins(&column(&[7.0; 40]), 3).unwrap();
        assert!(bins.features[0].cuts.is_empty());
        assert_eq!(bins.features[0].n_bins(), 2);
    }

    #[test]
    fn uniform_values_split_evenly() {
        let vals: Vec<f64> = (1..=90).map(f64::from).collect();
        let bins = build_bins(&column(&vals), 3).unwrap();
        let fb = &bins.features[0];
        assert_eq!(fb.cuts.len(), 2);
        // occupancy by exhaustive assignment
        let mut counts = vec![0usize; fb.n_bins()];
        for v in &vals {
            counts[fb.bin_of(Some(*v))] += 1;
        }
        for c in &counts[..3] {
            assert!((29..=31).contains(c), "{counts:?}");
        }
        assert_eq!(counts[3], 0);
    }

    #[test]
    fn missing_values_are_ignored_and_mapped_to_missing_bin() {
        let mut data = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        data.push(FeatureVector::new(vec![None]));
        data.push(FeatureVector::new(vec![Some(f64::NAN)]));
        let bins = build_bins(&data, 3).unwrap();
        let fb = &bins.features[0];
        assert_eq!(fb.cuts, vec![2.5, 4.5]);
        assert_eq!(fb.bin_of(None), 3);
        assert_eq!(fb.bin_of(Some(f64::NAN)), 3);
        assert_eq!(fb.bin_of(Some(2.5)), 1);
        assert_eq!(fb.bin_of(Some(-100.0)), 0);
    }

    #[test]
    fn all_missing_feature_has_only_value_and_missing_bins() {
        let data = vec![FeatureVector::new(vec![None]); 5];
        let bins = build_bins(&data, 3).unwrap();
        assert_eq!(bins.features[0].n_bins(), 2);
    }

    #[test]
    fn rejects_empty_and_ragged_input() {
        assert!(matches!(build_bins(&[], 3), Err(XlabelError::InvalidInput(_))));
        let ragged = vec![FeatureVector::from(vec![1.0]), FeatureVector::from(vec![1.0, 2.0])];
        assert!(build_bins(&ragged, 3).is_err());
        assert!(build_bins(&column(&[1.0]), 1).is_err());
    }

    #[test]
    fn rejects_unsorted_cuts() {
        assert!(FeatureBins::new(vec![2.0, 1.0]).is_err());
        assert!(FeatureBins::new(vec![1.0, 1.0]).is_err());
        assert!(FeatureBins::new(vec![f64::INFINITY]).is_err());
    }
}
