//! Top-k derivation and correlation-based minimization of metric subsets.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, MetricId, Release, METRIC_COUNT};
use crate::features::{pearson, FeatureSubset};
use crate::scenarios::{build_tasks, ScenarioSpec};
use crate::stats::median;

/// Default correlation threshold for strong pairs.
pub const DEFAULT_PHI: f64 = 0.6;
/// Default upper end of the k search range.
pub const DEFAULT_K_MAX: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SimplifyError {
    #[error("no filter subsets given")]
    NoSubsets,
    #[error("k must lie in 1..=20, got {0}")]
    InvalidK(usize),
    #[error("candidate subset is empty")]
    EmptyCandidate,
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("subset needs at least 2 metrics, got {0}")]
    SubsetTooSmall(usize),
    #[error("no admissible combinations")]
    NoCombinations,
    #[error("no target release has training data")]
    NoTrainingData,
    #[error("matrix is not a valid correlation matrix: {0}")]
    InvalidMatrix(String),
}

/// How often each metric appears across per-dataset FILTER subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceTally {
    pub counts: [usize; METRIC_COUNT],
    pub n_datasets: usize,
}

impl OccurrenceTally {
    pub fn count(&self, m: MetricId) -> usize {
        self.counts[m.index()]
    }

    /// Metrics ordered by count, descending, canonical order among ties.
    pub fn ranking(&self) -> Vec<(MetricId, usize)> {
        let mut out: Vec<(MetricId, usize)> =
            MetricId::ALL.iter().map(|&m| (m, self.count(m))).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1));
        out
    }
}

pub fn tally_occurrences(filter_subsets: &[FeatureSubset]) -> Result<OccurrenceTally, SimplifyError> {
    if filter_subsets.is_empty() {
        return Err(SimplifyError::NoSubsets);
    }
    let mut counts = [0; METRIC_COUNT];
    for s in filter_subsets {
        for m in s.iter() {
            counts[m.index()] += 1;
        }
    }
    Ok(OccurrenceTally {
        counts,
        n_datasets: filter_subsets.len(),
    })
}

/// The `k` most frequent metrics.
pub fn top_k(tally: &OccurrenceTally, k: usize) -> Result<FeatureSubset, SimplifyError> {
    if !(1..=METRIC_COUNT).contains(&k) {
        return Err(SimplifyError::InvalidK(k));
    }
    Ok(tally.ranking().into_iter().take(k).map(|(m, _)| m).collect())
}

/// Mean Jaccard overlap between `candidate` and every filter subset.
pub fn coverage(filter_subsets: &[FeatureSubset], candidate: FeatureSubset) -> Result<f64, SimplifyError> {
    if filter_subsets.is_empty() {
        return Err(SimplifyError::NoSubsets);
    }
    if candidate.is_empty() {
        return Err(SimplifyError::EmptyCandidate);
    }
    let sum: f64 = filter_subsets
        .iter()
        .map(|f| f.intersection(candidate).len() as f64 / f.union(candidate).len() as f64)
        .sum();
    Ok(sum / filter_subsets.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub k: usize,
    pub subset: FeatureSubset,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub best_k: usize,
    pub best_coverage: f64,
    pub points: Vec<CoveragePoint>,
}

impl CoverageCurve {
    pub fn best_subset(&self) -> FeatureSubset {
        self.points[self.best_k - 1].subset
    }
}

/// Coverage of `Top_k` for every k in `1..=k_max`; the peak wins, smallest k on ties.
pub fn choose_k(filter_subsets: &[FeatureSubset], k_max: usize) -> Result<CoverageCurve, SimplifyError> {
    if !(1..=METRIC_COUNT).contains(&k_max) {
        return Err(SimplifyError::InvalidK(k_max));
    }
    let tally = tally_occurrences(filter_subsets)?;
    let mut points = Vec::with_capacity(k_max);
    let mut best = 0;
    for k in 1..=k_max {
        let subset = top_k(&tally, k)?;
        let c = coverage(filter_subsets, subset)?;
        if c > points.get(best).map_or(f64::NEG_INFINITY, |p: &CoveragePoint| p.coverage) {
            best = k - 1;
        }
        points.push(CoveragePoint { k, subset, coverage: c });
    }
    Ok(CoverageCurve {
        best_k: best + 1,
        best_coverage: points[best].coverage,
        points,
    })
}

/// Symmetric matrix of correlations among the metrics of a subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<MetricId>,
    /// Row-major, `metrics.len()²` entries.
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    /// Builds a matrix from its strict upper triangle, row by row.
    pub fn from_upper(subset: FeatureSubset, upper: &[f64]) -> Result<CorrelationMatrix, SimplifyError> {
        let metrics = subset.to_vec();
        let k = metrics.len();
        if upper.len() != k * (k - 1) / 2 {
            return Err(SimplifyError::InvalidMatrix(format!(
                "{} metrics need {} upper entries, got {}",
                k,
                k * (k - 1) / 2,
                upper.len()
            )));
        }
        let mut values = vec![0.0; k * k];
        let mut it = upper.iter();
        for i in 0..k {
            values[i * k + i] = 1.0;
            for j in (i + 1)..k {
                let v = *it.next().expect("length checked");
                if !(-1.0..=1.0).contains(&v) {
                    return Err(SimplifyError::InvalidMatrix(format!("entry {v} outside [-1, 1]")));
                }
                values[i * k + j] = v;
                values[j * k + i] = v;
            }
        }
        Ok(CorrelationMatrix { metrics, values })
    }

    pub fn size(&self) -> usize {
        self.metrics.len()
    }

    pub fn subset(&self) -> FeatureSubset {
        self.metrics.iter().copied().collect()
    }

    pub fn get(&self, a: MetricId, b: MetricId) -> Option<f64> {
        let i = self.metrics.iter().position(|&m| m == a)?;
        let j = self.metrics.iter().position(|&m| m == b)?;
        Some(self.values[i * self.size() + j])
    }

    /// Unordered metric pairs with their correlation, upper triangle order.
    pub fn pairs(&self) -> Vec<(MetricId, MetricId, f64)> {
        let k = self.size();
        let mut out = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                out.push((self.metrics[i], self.metrics[j], self.values[i * k + j]));
            }
        }
        out
    }
}

/// Pearson matrix of `subset` over the concatenated instances of `releases`.
pub fn release_correlation(releases: &[&Release], subset: FeatureSubset) -> Result<CorrelationMatrix, SimplifyError> {
    if subset.len() < 2 {
        return Err(SimplifyError::SubsetTooSmall(subset.len()));
    }
    let columns: Vec<Vec<f64>> = subset
        .iter()
        .map(|m| releases.iter().flat_map(|r| r.instances.iter().map(move |i| i.metric(m))).collect())
        .collect();
    let mut upper = Vec::new();
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            upper.push(pearson(&columns[i], &columns[j]).unwrap_or(0.0));
        }
    }
    CorrelationMatrix::from_upper(subset, &upper)
}

/// Elementwise median of matrices over the same subset.
pub fn median_matrix(matrices: &[CorrelationMatrix]) -> Result<CorrelationMatrix, SimplifyError> {
    let first = matrices.first().ok_or(SimplifyError::NoTrainingData)?;
    let subset = first.subset();
    let k = first.size();
    let mut upper = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let cell: Vec<f64> = matrices.iter().map(|m| m.values[i * k + j]).collect();
            upper.push(median(&cell).expect("non-empty"));
        }
    }
    CorrelationMatrix::from_upper(subset, &upper)
}

/// Median correlation matrix plus the targets that lacked training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCorrelation {
    pub matrix: CorrelationMatrix,
    pub targets: Vec<String>,
    pub skipped: Vec<String>,
}

/// Per target, correlations over the scenario's training data; entries are
/// medians across targets. CPDP targets use the whole foreign-release pool.
pub fn correlation_matrix(
    corpus: &Corpus,
    subset: FeatureSubset,
    scenario: &ScenarioSpec,
) -> Result<ScenarioCorrelation, SimplifyError> {
    if subset.len() < 2 {
        return Err(SimplifyError::SubsetTooSmall(subset.len()));
    }
    let mut matrices = Vec::new();
    let mut targets = Vec::new();
    let mut skipped = Vec::new();
    for task in build_tasks(corpus, scenario) {
        let key = corpus.releases[task.target].key();
        if task.training.is_empty() {
            skipped.push(key);
            continue;
        }
        let training: Vec<&Release> = task.training.iter().map(|&i| &corpus.releases[i]).collect();
        matrices.push(release_correlation(&training, subset)?);
        targets.push(key);
    }
    Ok(ScenarioCorrelation {
        matrix: median_matrix(&matrices)?,
        targets,
        skipped,
    })
}

/// Pairs whose correlation exceeds `phi` (strictly). With `absolute`, the
/// magnitude is compared instead of the signed value.
pub fn strong_pairs(
    matrix: &CorrelationMatrix,
    phi: f64,
    absolute: bool,
) -> Result<Vec<(MetricId, MetricId)>, SimplifyError> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(SimplifyError::InvalidThreshold(phi));
    }
    Ok(matrix
        .pairs()
        .into_iter()
        .filter(|&(_, _, r)| if absolute { r.abs() > phi } else { r > phi })
        .map(|(a, b, _)| (a, b))
        .collect())
}

/// Canonical lexicographic order on the sorted member lists.
fn lexicographic(a: FeatureSubset, b: FeatureSubset) -> Ordering {
    a.indices().cmp(&b.indices())
}

/// Proper non-empty subsets of `topk` that never hold both ends of a strong
/// pair, ordered by size, then lexicographically.
pub fn enumerate_admissible(
    topk: FeatureSubset,
    strong: &[(MetricId, MetricId)],
) -> Result<Vec<FeatureSubset>, SimplifyError> {
    let members = topk.to_vec();
    let k = members.len();
    if k < 2 {
        return Err(SimplifyError::SubsetTooSmall(k));
    }
    let mut out = Vec::new();
    for mask in 1u32..((1 << k) - 1) {
        let combo: FeatureSubset = (0..k)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| members[i])
            .collect();
        if strong.iter().all(|&(a, b)| !(combo.contains(a) && combo.contains(b))) {
            out.push(combo);
        }
    }
    out.sort_by(|&a, &b| a.len().cmp(&b.len()).then_with(|| lexicographic(a, b)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCombination {
    pub subset: FeatureSubset,
    pub coverage: f64,
}

/// Admissible combinations ranked by coverage, descending; smaller and then
/// lexicographically earlier combinations win ties. The head is the minimum
/// metric subset.
pub fn minimum_subset(
    admissible: &[FeatureSubset],
    filter_subsets: &[FeatureSubset],
) -> Result<Vec<RankedCombination>, SimplifyError> {
    if admissible.is_empty() {
        return Err(SimplifyError::NoCombinations);
    }
    let mut ranked = admissible
        .iter()
        .map(|&subset| {
            Ok(RankedCombination {
                subset,
                coverage: coverage(filter_subsets, subset)?,
            })
        })
        .collect::<Result<Vec<_>, SimplifyError>>()?;
    ranked.sort_by(|a, b| {
        b.coverage
            .total_cmp(&a.coverage)
            .then(a.subset.len().cmp(&b.subset.len()))
            .then_with(|| lexicographic(a.subset, b.subset))
    });
    Ok(ranked)
}
