//! Filter-style feature selection.
//!
//! [`greedy_stepwise_cfs`] is the FILTER predictor: correlation-based subset
//! evaluation (symmetrical uncertainty over equal-frequency bins) driven by a
//! forward greedy search. [`max_rel`] and [`mrmr`] are the mutual-information
//! baselines.

mod cfs;
mod correlation;
pub(crate) mod discretize;
mod information;
mod mrmr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, MetricId, Release, UnknownMetric, METRIC_COUNT};

pub use cfs::{cfs_merit, greedy_stepwise_cfs, CfsEvaluator, DEFAULT_BINS};
pub use correlation::pearson;
pub use discretize::{discretize_equal_frequency, DiscretizedColumn};
pub use information::{entropy, mutual_information, symmetrical_uncertainty};
pub use mrmr::{max_rel, mrmr};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("bin count must be at least 2, got {0}")]
    InvalidBinCount(usize),
    #[error("subset is empty")]
    EmptySubset,
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("k must lie in 1..=20, got {0}")]
    InvalidK(usize),
}

/// A set of metrics, always iterated in canonical order.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSubset(u32);

impl FeatureSubset {
    pub const fn empty() -> FeatureSubset {
        FeatureSubset(0)
    }

    pub const fn all() -> FeatureSubset {
        FeatureSubset((1 << METRIC_COUNT) - 1)
    }

    pub fn from_bits(bits: u32) -> FeatureSubset {
        FeatureSubset(bits & Self::all().0)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn insert(&mut self, m: MetricId) {
        self.0 |= 1 << m.index();
    }

    pub fn remove(&mut self, m: MetricId) {
        self.0 &= !(1 << m.index());
    }

    pub fn with(mut self, m: MetricId) -> FeatureSubset {
        self.insert(m);
        self
    }

    pub fn without(mut self, m: MetricId) -> FeatureSubset {
        self.remove(m);
        self
    }

    pub fn contains(self, m: MetricId) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: FeatureSubset) -> FeatureSubset {
        FeatureSubset(self.0 & other.0)
    }

    pub fn union(self, other: FeatureSubset) -> FeatureSubset {
        FeatureSubset(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: FeatureSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = MetricId> {
        MetricId::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    pub fn to_vec(self) -> Vec<MetricId> {
        self.iter().collect()
    }

    pub fn indices(self) -> Vec<usize> {
        self.iter().map(MetricId::index).collect()
    }

    /// Names joined by `+`, e.g. `CBO+LCOM+LOC`.
    pub fn label(self) -> String {
        if self.is_empty() {
            return "{}".into();
        }
        self.iter().map(MetricId::name).collect::<Vec<_>>().join("+")
    }
}

impl FromIterator<MetricId> for FeatureSubset {
    fn from_iter<T: IntoIterator<Item = MetricId>>(iter: T) -> Self {
        let mut s = FeatureSubset::empty();
        for m in iter {
            s.insert(m);
        }
        s
    }
}

impl fmt::Debug for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label())
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `CBO+LOC`, `CBO,LOC` or `CBO LOC`.
impl FromStr for FeatureSubset {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(['+', ',', ' '])
            .filter(|t| !t.trim().is_empty())
            .map(str::parse::<MetricId>)
            .collect()
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(MetricId::name))
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<MetricId>::deserialize(deserializer)?;
        Ok(names.into_iter().collect())
    }
}

/// Column-major metric matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    columns: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl LabeledData {
    /// Concatenates the instances of binarized releases.
    pub fn from_releases<'a, I>(releases: I) -> Result<LabeledData, CorpusError>
    where
        I: IntoIterator<Item = &'a Release>,
    {
        let mut columns = vec![Vec::new(); METRIC_COUNT];
        let mut labels = Vec::new();
        for r in releases {
            labels.extend(r.labels()?);
            for inst in &r.instances {
                for (c, v) in columns.iter_mut().zip(inst.metrics.iter()) {
                    c.push(*v);
                }
            }
        }
        Ok(LabeledData { columns, labels })
    }

    /// Builds a dataset from selected columns; every other metric is constant 0.
    pub fn from_columns(
        columns: Vec<(MetricId, Vec<f64>)>,
        labels: Vec<bool>,
    ) -> Result<LabeledData, FeatureError> {
        let n = labels.len();
        let mut full = vec![vec![0.0; n]; METRIC_COUNT];
        for (m, col) in columns {
            if col.len() != n {
                return Err(FeatureError::LengthMismatch(col.len(), n));
            }
            full[m.index()] = col;
        }
        Ok(LabeledData {
            columns: full,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn column(&self, m: MetricId) -> &[f64] {
        &self.columns[m.index()]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&b| b).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.len()
    }

    /// Value of metric `m` for instance `row`.
    pub fn value(&self, row: usize, m: MetricId) -> f64 {
        self.columns[m.index()][row]
    }

    /// Row-major values of `subset` for every instance.
    pub fn project(&self, subset: FeatureSubset) -> Vec<f64> {
        let idx = subset.indices();
        let mut out = Vec::with_capacity(idx.len() * self.len());
        for row in 0..self.len() {
            out.extend(idx.iter().map(|&c| self.columns[c][row]));
        }
        out
    }
}
