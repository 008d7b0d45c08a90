use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(truth: &[u8], predicted: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&y, &p) in truth.iter().zip(predicted) {
            match (y, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, _) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Ratios with an empty denominator are reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricSet {
    pub fn from_confusion(c: &Confusion) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricSet {
            f1,
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.f1, self.accuracy, self.precision, self.recall]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        MetricSet {
            f1: a[0],
            accuracy: a[1],
            precision: a[2],
            recall: a[3],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_confusion() {
        let truth = [1, 1, 1, 0, 0, 0, 0, 1];
        let pred = [1, 0, 1, 1, 0, 0, 0, 0];
        let c = Confusion::from_pairs(&truth, &pred);
        assert_eq!(c, Confusion { tp: 2, fp: 1, tn: 3, fn_: 2 });
        let m = MetricSet::from_confusion(&c);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 0.5).abs() < 1e-15);
        assert!((m.accuracy - 5.0 / 8.0).abs() < 1e-15);
        assert!((m.f1 - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn all_negative_predictions() {
        let truth = [1, 0, 0, 0];
        let m = MetricSet::from_confusion(&Confusion::from_pairs(&truth, &[0; 4]));
        assert_eq!((m.f1, m.precision, m.recall), (0.0, 0.0, 0.0));
        assert_eq!(m.accuracy, 0.75);
    }
}
