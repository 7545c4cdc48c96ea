use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cliffs_delta, median, wilcoxon_signed_rank, MeasureTriple, StatsError, WilcoxonResult};

/// Median ratio above which method B counts as acceptable regardless of p.
pub const RATIO_RULE: f64 = 0.9;
/// Default significance level for the signed-rank test.
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Precision,
    Recall,
    FMeasure,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Precision, Measure::Recall, Measure::FMeasure];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Precision => "Precision",
            Measure::Recall => "Recall",
            Measure::FMeasure => "F-measure",
        }
    }

    pub fn of(self, m: &MeasureTriple) -> f64 {
        match self {
            Measure::Precision => m.precision,
            Measure::Recall => m.recall,
            Measure::FMeasure => m.f_measure,
        }
    }
}

/// Measures of one result row under its matching key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub key: String,
    pub measures: MeasureTriple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WilcoxonCell {
    Tested(WilcoxonResult),
    /// Every paired difference was zero.
    NoDifference,
    TooFewPairs { nonzero: usize },
}

impl WilcoxonCell {
    /// p-value used by the acceptability rule; no difference reads as 1.
    pub fn p(&self) -> Option<f64> {
        match self {
            WilcoxonCell::Tested(r) => Some(r.p),
            WilcoxonCell::NoDifference => Some(1.0),
            WilcoxonCell::TooFewPairs { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureComparison {
    pub measure: Measure,
    pub median_a: f64,
    pub median_b: f64,
    /// `median_b / median_a`; absent when `median_a` is 0.
    pub ratio: Option<f64>,
    pub wilcoxon: WilcoxonCell,
    /// Cliff's d with A on the left.
    pub cliffs_d: f64,
    pub acceptable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub method_a: String,
    pub method_b: String,
    pub pairs: usize,
    pub measures: Vec<MeasureComparison>,
}

impl ComparisonReport {
    pub fn measure(&self, m: Measure) -> &MeasureComparison {
        self.measures.iter().find(|c| c.measure == m).expect("every measure is compared")
    }
}

fn keyed(rows: &[PairedRow]) -> Result<BTreeMap<&str, &MeasureTriple>, Vec<String>> {
    let mut map = BTreeMap::new();
    let mut dups = Vec::new();
    for r in rows {
        if map.insert(r.key.as_str(), &r.measures).is_some() {
            dups.push(format!("duplicate {}", r.key));
        }
    }
    if dups.is_empty() {
        Ok(map)
    } else {
        Err(dups)
    }
}

/// Compares method B against method A on rows matched by key. B is
/// acceptable for a measure when its median ratio exceeds 0.9 or the
/// signed-rank p exceeds `alpha`.
pub fn compare_methods(
    method_a: &str,
    rows_a: &[PairedRow],
    method_b: &str,
    rows_b: &[PairedRow],
    alpha: f64,
) -> Result<ComparisonReport, StatsError> {
    let a = keyed(rows_a).map_err(StatsError::MatchingFailure)?;
    let b = keyed(rows_b).map_err(StatsError::MatchingFailure)?;
    let mut unmatched: Vec<String> = a
        .keys()
        .filter(|k| !b.contains_key(*k))
        .map(|k| format!("only in {method_a}: {k}"))
        .collect();
    unmatched.extend(b.keys().filter(|k| !a.contains_key(*k)).map(|k| format!("only in {method_b}: {k}")));
    if !unmatched.is_empty() || a.is_empty() {
        return Err(StatsError::MatchingFailure(unmatched));
    }
    let mut measures = Vec::new();
    for m in Measure::ALL {
        let xa: Vec<f64> = a.values().map(|t| m.of(t)).collect();
        let xb: Vec<f64> = b.values().map(|t| m.of(t)).collect();
        let (median_a, median_b) = (median(&xa)?, median(&xb)?);
        let ratio = (median_a != 0.0).then(|| median_b / median_a);
        let wilcoxon = match wilcoxon_signed_rank(&xa, &xb) {
            Ok(r) => WilcoxonCell::Tested(r),
            Err(StatsError::AllZeroDifferences) => WilcoxonCell::NoDifference,
            Err(StatsError::TooFewPairs { got, .. }) => WilcoxonCell::TooFewPairs { nonzero: got },
            Err(e) => return Err(e),
        };
        let acceptable = ratio.is_some_and(|r| r > RATIO_RULE) || wilcoxon.p().is_some_and(|p| p > alpha);
        measures.push(MeasureComparison {
            measure: m,
            median_a,
            median_b,
            ratio,
            wilcoxon,
            cliffs_d: cliffs_delta(&xa, &xb)?,
            acceptable,
        });
    }
    Ok(ComparisonReport {
        method_a: method_a.to_string(),
        method_b: method_b.to_string(),
        pairs: a.len(),
        measures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            precision: 0.5,
            recall: 0.7,
            f_measure: 0.583,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdCounts {
    pub precision: usize,
    pub recall: usize,
    pub f_measure: usize,
    /// Rows clearing both the precision and the recall threshold.
    pub total: usize,
    pub rows: usize,
}

/// Rows strictly above each threshold.
pub fn threshold_counts(rows: &[MeasureTriple], t: &Thresholds) -> ThresholdCounts {
    let count = |f: &dyn Fn(&MeasureTriple) -> bool| rows.iter().filter(|r| f(r)).count();
    ThresholdCounts {
        precision: count(&|r| r.precision > t.precision),
        recall: count(&|r| r.recall > t.recall),
        f_measure: count(&|r| r.f_measure > t.f_measure),
        total: count(&|r| r.precision > t.precision && r.recall > t.recall),
        rows: rows.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(p: f64, r: f64, f: f64) -> MeasureTriple {
        MeasureTriple {
            precision: p,
            recall: r,
            f_measure: f,
        }
    }

    fn rows(vals: &[(f64, f64, f64)]) -> Vec<PairedRow> {
        vals.iter()
            .enumerate()
            .map(|(i, &(p, r, f))| PairedRow {
                key: format!("t{i:02}"),
                measures: triple(p, r, f),
            })
            .collect()
    }

    fn fixture(n: usize) -> Vec<(f64, f64, f64)> {
        (0..n)
            .map(|i| {
                let x = (i * 37 % 23) as f64 / 23.0;
                (0.3 + 0.5 * x, 0.9 - 0.4 * x, 0.4 + 0.3 * x)
            })
            .collect()
    }

    #[test]
    fn self_comparison() {
        let a = rows(&fixture(24));
        let r = compare_methods("ALL", &a, "ALL", &a, DEFAULT_ALPHA).unwrap();
        for c in &r.measures {
            assert_eq!(c.ratio, Some(1.0));
            assert_eq!(c.wilcoxon, WilcoxonCell::NoDifference);
            assert_eq!(c.cliffs_d, 0.0);
            assert!(c.acceptable);
        }
    }

    #[test]
    fn scaled_measure_is_acceptable_by_ratio() {
        let base = fixture(24);
        let a = rows(&base);
        let b = rows(&base.iter().map(|&(p, r, f)| (p, r, f * 0.95)).collect::<Vec<_>>());
        let r = compare_methods("ALL", &a, "TOP5", &b, DEFAULT_ALPHA).unwrap();
        let f = r.measure(Measure::FMeasure);
        assert!((f.ratio.unwrap() - 0.95).abs() < 1e-12);
        assert!(f.wilcoxon.p().unwrap() < DEFAULT_ALPHA);
        assert!(f.acceptable);
    }

    #[test]
    fn unmatched_keys_are_listed() {
        let a = rows(&fixture(3));
        let mut b = rows(&fixture(3));
        b[2].key = "other".into();
        match compare_methods("A", &a, "B", &b, DEFAULT_ALPHA) {
            Err(StatsError::MatchingFailure(keys)) => {
                assert_eq!(keys, vec!["only in A: t02".to_string(), "only in B: other".to_string()])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn threshold_examples() {
        let sat = vec![triple(1.0, 1.0, 1.0); 4];
        let c = threshold_counts(&sat, &Thresholds::default());
        assert_eq!((c.precision, c.recall, c.f_measure, c.total), (4, 4, 4, 4));
        let low = vec![triple(0.4, 0.6, 0.5); 4];
        let c = threshold_counts(&low, &Thresholds::default());
        assert_eq!((c.precision, c.recall, c.f_measure, c.total), (0, 0, 0, 0));
    }

    #[test]
    fn mixed_threshold_tally() {
        let rows = vec![
            triple(0.6, 0.8, 0.69),
            triple(0.5, 0.9, 0.64),
            triple(0.7, 0.6, 0.65),
            triple(0.2, 0.75, 0.32),
            triple(0.55, 0.71, 0.62),
            triple(0.9, 0.7, 0.79),
            triple(0.1, 0.1, 0.1),
            triple(0.51, 0.95, 0.583),
            triple(0.45, 0.65, 0.53),
            triple(0.8, 0.72, 0.76),
        ];
        // precision > 0.5: rows 0,2,4,5,7,9; recall > 0.7: 0,1,3,4,7,9;
        // F > 0.583: 0,1,2,4,5,9; both P and R: 0,4,7,9
        let c = threshold_counts(&rows, &Thresholds::default());
        assert_eq!((c.precision, c.recall, c.f_measure, c.total, c.rows), (6, 6, 6, 4, 10));
    }
}
