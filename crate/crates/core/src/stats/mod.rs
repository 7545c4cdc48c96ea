//! Evaluation measures and the statistical comparison toolkit.

mod anova;
mod compare;
mod describe;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{anova_oneway, AnovaResult};
pub use compare::{
    compare_methods, threshold_counts, ComparisonReport, Measure, MeasureComparison, DEFAULT_ALPHA, RATIO_RULE,
    PairedRow, Thresholds, ThresholdCounts, WilcoxonCell,
};
pub use describe::{boxplot, median, quantile, BoxplotSummary};
pub use wilcoxon::{cliffs_delta, wilcoxon_exact_p, wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("test set has no buggy or no clean instances (k = {k}, n = {n})")]
    DegenerateTestSet { k: u64, n: u64 },
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("need at least {needed} non-zero differences, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least 2 groups of at least 2 observations")]
    TooFewGroups,
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("rows could not be matched: {0:?}")]
    MatchingFailure(Vec<String>),
}

/// Confusion counts of one prediction cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Outcome {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Outcome {
        Outcome { tp, fp, tn, fn_ }
    }

    /// Tallies predicted flags against true labels.
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Outcome {
        let mut o = Outcome::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => o.tp += 1,
                (true, false) => o.fp += 1,
                (false, false) => o.tn += 1,
                (false, true) => o.fn_ += 1,
            }
        }
        o
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn actual_positives(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureTriple {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// Precision, recall and F-measure; every zero denominator yields 0.
pub fn measures(o: &Outcome) -> MeasureTriple {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(o.tp, o.tp + o.fp);
    let recall = ratio(o.tp, o.tp + o.fn_);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    MeasureTriple {
        precision,
        recall,
        f_measure,
    }
}

/// `(d·n − k²) / (k·(n − k))` with `d = TP`, `k = TP + FN`.
pub fn consistency(o: &Outcome) -> Result<f64, StatsError> {
    let n = o.total();
    let k = o.actual_positives();
    if k == 0 || k >= n {
        return Err(StatsError::DegenerateTestSet { k, n });
    }
    let (d, n, k) = (o.tp as f64, n as f64, k as f64);
    Ok((d * n - k * k) / (k * (n - k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn measure_examples() {
        let zero = measures(&Outcome::new(0, 0, 10, 0));
        assert_eq!((zero.precision, zero.recall, zero.f_measure), (0.0, 0.0, 0.0));
        let perfect = measures(&Outcome::new(5, 0, 3, 0));
        assert_eq!((perfect.precision, perfect.recall, perfect.f_measure), (1.0, 1.0, 1.0));
        let m = measures(&Outcome::new(3, 1, 4, 2));
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.6);
        assert!((m.f_measure - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn consistency_examples() {
        assert_eq!(consistency(&Outcome::new(4, 2, 4, 0)).unwrap(), 1.0);
        assert!((consistency(&Outcome::new(3, 0, 6, 1)).unwrap() - 14.0 / 24.0).abs() < 1e-12);
        assert!((consistency(&Outcome::new(0, 2, 4, 4)).unwrap() + 16.0 / 24.0).abs() < 1e-12);
        assert!(consistency(&Outcome::new(0, 3, 7, 0)).is_err());
        assert!(consistency(&Outcome::new(6, 0, 0, 4)).is_err());
    }

    #[test]
    fn outcome_from_predictions() {
        let o = Outcome::from_predictions(&[true, true, false, false], &[true, false, false, true]);
        assert_eq!(o, Outcome::new(1, 1, 1, 1));
        let json = serde_json::to_string(&o).unwrap();
        assert_eq!(json, r#"{"tp":1,"fp":1,"tn":1,"fn":1}"#);
    }

    proptest! {
        #[test]
        fn measures_bounded_and_harmonic(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let m = measures(&Outcome::new(tp, fp, tn, fn_));
            for v in [m.precision, m.recall, m.f_measure] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f_measure - h).abs() < 1e-12);
            } else {
                prop_assert_eq!(m.f_measure, 0.0);
            }
        }

        #[test]
        fn more_hits_never_hurt(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let a = measures(&Outcome::new(tp, fp, 0, fn_));
            let b = measures(&Outcome::new(tp + 1, fp, 0, fn_));
            prop_assert!(b.precision >= a.precision);
            prop_assert!(b.recall >= a.recall);
            prop_assert!(b.f_measure >= a.f_measure);
        }

        #[test]
        fn consistency_is_one_iff_all_found(tp in 0u64..30, fp in 0u64..30, tn in 0u64..30, fn_ in 0u64..30) {
            let o = Outcome::new(tp, fp, tn, fn_);
            if let Ok(c) = consistency(&o) {
                prop_assert!(c <= 1.0 + 1e-12);
                prop_assert_eq!(c == 1.0, fn_ == 0);
            }
        }
    }
}
