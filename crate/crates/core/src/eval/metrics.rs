use serde::{Deserialize, Serialize};

use super::align::{AlignmentResult, Counts, EvalMode};

/// Accuracy, precision and recall over confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mode: EvalMode,
    pub counts: Counts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub mislabel_count: u64,
}

impl MetricReport {
    /// Empty denominators score 1: a PII-free record with a PII-free
    /// prediction is perfect, not undefined.
    pub fn from_counts(counts: Counts, mode: EvalMode) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let Counts { tp, fp, fn_, tn, .. } = counts;
        MetricReport {
            mode,
            counts,
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            mislabel_count: counts.mislabels,
        }
    }

    pub fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }
}

pub fn compute_prf(a: &AlignmentResult) -> MetricReport {
    MetricReport::from_counts(a.counts, a.mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Counts {
        Counts { tp, fp, fn_, tn, ..Counts::default() }
    }

    #[test]
    fn perfect() {
        let m = MetricReport::from_counts(counts(2, 0, 0, 8), EvalMode::SpanCorrect);
        assert_eq!((m.precision, m.recall, m.accuracy), (1.0, 1.0, 1.0));
    }

    #[test]
    fn vacuous_precision() {
        let m = MetricReport::from_counts(counts(0, 0, 1, 2), EvalMode::SpanCorrect);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 0.0);
        assert!((m.accuracy - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mixed() {
        let m = MetricReport::from_counts(counts(3, 1, 2, 14), EvalMode::LabelExact);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert!((m.accuracy - 0.85).abs() < 1e-12);
    }

    #[test]
    fn all_zero_is_perfect() {
        let m = MetricReport::from_counts(Counts::default(), EvalMode::SpanCorrect);
        assert_eq!((m.precision, m.recall, m.accuracy), (1.0, 1.0, 1.0));
    }
}
