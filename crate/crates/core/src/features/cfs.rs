//! Correlation-based feature subset evaluation with greedy forward search.
//!
//! Both feature–class and feature–feature correlations are symmetrical
//! uncertainties over equal-frequency bins. This differs from the
//! MDL-discretized evaluator found in common toolkits, so selected subsets on
//! real data can differ slightly from theirs.

use crate::corpus::{MetricId, METRIC_COUNT};

use super::discretize::discretize_equal_frequency;
use super::information::{entropy, su_with_entropies};
use super::{DiscretizedColumn, FeatureError, FeatureSubset, LabeledData};

/// Default number of equal-frequency bins.
pub const DEFAULT_BINS: usize = 10;

/// Precomputed correlations for one dataset.
#[derive(Debug, Clone)]
pub struct CfsEvaluator {
    class_su: [f64; METRIC_COUNT],
    pair_su: Vec<f64>,
}

impl CfsEvaluator {
    pub fn new(data: &LabeledData, bins: usize) -> Result<CfsEvaluator, FeatureError> {
        if data.len() < 2 {
            return Err(FeatureError::TooFewSamples {
                needed: 2,
                got: data.len(),
            });
        }
        let bins = bins.min(data.len());
        let columns: Vec<DiscretizedColumn> = MetricId::ALL
            .iter()
            .map(|&m| discretize_equal_frequency(data.column(m), bins))
            .collect::<Result<_, _>>()?;
        let class = DiscretizedColumn::from_labels(data.labels());
        let h: Vec<f64> = columns.iter().map(entropy).collect();
        let hc = entropy(&class);
        let mut class_su = [0.0; METRIC_COUNT];
        for i in 0..METRIC_COUNT {
            class_su[i] = su_with_entropies(&columns[i], &class, h[i], hc);
        }
        let mut pair_su = vec![1.0; METRIC_COUNT * METRIC_COUNT];
        for i in 0..METRIC_COUNT {
            for j in (i + 1)..METRIC_COUNT {
                let su = su_with_entropies(&columns[i], &columns[j], h[i], h[j]);
                pair_su[i * METRIC_COUNT + j] = su;
                pair_su[j * METRIC_COUNT + i] = su;
            }
        }
        Ok(CfsEvaluator { class_su, pair_su })
    }

    /// SU between a metric and the class label.
    pub fn class_correlation(&self, m: MetricId) -> f64 {
        self.class_su[m.index()]
    }

    /// SU between two metrics.
    pub fn feature_correlation(&self, a: MetricId, b: MetricId) -> f64 {
        self.pair_su[a.index() * METRIC_COUNT + b.index()]
    }

    /// `k·mean(r_cf) / sqrt(k + k(k−1)·mean(r_ff))`, pairwise mean over
    /// unordered pairs. A non-positive radicand gives 0.
    pub fn merit(&self, subset: FeatureSubset) -> Result<f64, FeatureError> {
        if subset.is_empty() {
            return Err(FeatureError::EmptySubset);
        }
        let members = subset.indices();
        let k = members.len() as f64;
        let rcf = members.iter().map(|&i| self.class_su[i]).sum::<f64>() / k;
        let mut rff = 0.0;
        if members.len() > 1 {
            let mut sum = 0.0;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    sum += self.pair_su[i * METRIC_COUNT + j];
                }
            }
            rff = sum / (k * (k - 1.0) / 2.0);
        }
        let radicand = k + k * (k - 1.0) * rff;
        if radicand <= 0.0 {
            return Ok(0.0);
        }
        Ok(k * rcf / radicand.sqrt())
    }

    /// Forward greedy search from the empty set. Each step adds the metric
    /// with the highest merit (lowest canonical index on ties) and the search
    /// stops once no addition strictly improves the merit.
    pub fn greedy_forward(&self) -> FeatureSubset {
        let mut selected = FeatureSubset::empty();
        let mut current = f64::NEG_INFINITY;
        loop {
            let mut best: Option<(MetricId, f64)> = None;
            for m in MetricId::ALL {
                if selected.contains(m) {
                    continue;
                }
                let merit = self
                    .merit(selected.with(m))
                    .expect("candidate subsets are non-empty");
                if best.is_none_or(|(_, b)| merit > b) {
                    best = Some((m, merit));
                }
            }
            match best {
                Some((m, merit)) if merit > current => {
                    selected.insert(m);
                    current = merit;
                }
                _ => return selected,
            }
        }
    }
}

/// Merit of one subset on one dataset.
pub fn cfs_merit(
    subset: FeatureSubset,
    data: &LabeledData,
    bins: usize,
) -> Result<f64, FeatureError> {
    if subset.is_empty() {
        return Err(FeatureError::EmptySubset);
    }
    CfsEvaluator::new(data, bins)?.merit(subset)
}

/// The FILTER subset of a labeled dataset.
pub fn greedy_stepwise_cfs(data: &LabeledData, bins: usize) -> Result<FeatureSubset, FeatureError> {
    if !data.has_both_classes() {
        return Err(FeatureError::SingleClassData);
    }
    Ok(CfsEvaluator::new(data, bins)?.greedy_forward())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{discretize_equal_frequency, symmetrical_uncertainty};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use MetricId::*;

    fn labels(n: usize, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_bool(0.4)).collect()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..10.0)).collect()
    }

    /// Feature 0 copies the label; the others are noise.
    fn single_informative(n: usize) -> (LabeledData, Vec<f64>) {
        let y = labels(n, 1);
        let signal: Vec<f64> = y.iter().map(|&b| if b { 5.0 } else { 1.0 }).collect();
        let data = LabeledData::from_columns(
            vec![
                (Cbo, signal.clone()),
                (Wmc, noise(n, 2)),
                (Rfc, noise(n, 3)),
                (Loc, noise(n, 4)),
            ],
            y,
        )
        .unwrap();
        (data, signal)
    }

    /// Independent formula evaluation straight from the column data.
    fn brute_merit(data: &LabeledData, subset: &[MetricId], bins: usize) -> f64 {
        let disc = |m: MetricId| discretize_equal_frequency(data.column(m), bins).unwrap();
        let class = DiscretizedColumn::from_labels(data.labels());
        let k = subset.len() as f64;
        let rcf: f64 = subset
            .iter()
            .map(|&m| symmetrical_uncertainty(&disc(m), &class).unwrap())
            .sum::<f64>()
            / k;
        let mut pairs = Vec::new();
        for (i, &a) in subset.iter().enumerate() {
            for &b in &subset[i + 1..] {
                pairs.push(symmetrical_uncertainty(&disc(a), &disc(b)).unwrap());
            }
        }
        let rff = if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().sum::<f64>() / pairs.len() as f64
        };
        k * rcf / (k + k * (k - 1.0) * rff).sqrt()
    }

    #[test]
    fn singleton_merit_is_class_su() {
        let (data, _) = single_informative(60);
        let ev = CfsEvaluator::new(&data, 10).unwrap();
        for m in [Cbo, Wmc, Rfc] {
            let s = FeatureSubset::empty().with(m);
            assert_eq!(ev.merit(s).unwrap(), ev.class_correlation(m));
        }
        assert_eq!(ev.merit(FeatureSubset::empty()), Err(FeatureError::EmptySubset));
    }

    #[test]
    fn merit_matches_brute_force_on_every_subset() {
        let n = 80;
        let y = labels(n, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a: Vec<f64> = y.iter().map(|&b| if b { 2.0 } else { 0.0 } + rng.random_range(0.0..3.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v * 0.5 + rng.random_range(0.0..1.0)).collect();
        let c = noise(n, 11);
        let d: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { 0.0 } + rng.random_range(0.0..4.0)).collect();
        let features = [Wmc, Cbo, Lcom, Loc];
        let data = LabeledData::from_columns(
            features.iter().copied().zip([a, b, c, d]).collect(),
            y,
        )
        .unwrap();
        let ev = CfsEvaluator::new(&data, 10).unwrap();
        for mask in 1u32..16 {
            let members: Vec<MetricId> = (0..4).filter(|i| mask & (1 << i) != 0).map(|i| features[i]).collect();
            let subset: FeatureSubset = members.iter().copied().collect();
            let got = ev.merit(subset).unwrap();
            let want = brute_merit(&data, &subset.to_vec(), 10);
            assert!((got - want).abs() < 1e-12, "{subset}: {got} vs {want}");
            assert_eq!(cfs_merit(subset, &data, 10).unwrap(), got);
        }
    }

    #[test]
    fn duplicate_never_raises_singleton_merit() {
        let (data, signal) = single_informative(60);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let fuzzy: Vec<f64> = signal.iter().map(|v| v + rng.random_range(0.0..6.0)).collect();
        let dup = LabeledData::from_columns(
            vec![(Cbo, fuzzy.clone()), (Ce, fuzzy), (Wmc, data.column(Wmc).to_vec())],
            data.labels().to_vec(),
        )
        .unwrap();
        let ev = CfsEvaluator::new(&dup, 10).unwrap();
        let single = ev.merit(FeatureSubset::empty().with(Cbo)).unwrap();
        let pair = ev.merit(FeatureSubset::empty().with(Cbo).with(Ce)).unwrap();
        assert_eq!(ev.feature_correlation(Cbo, Ce), 1.0);
        assert_eq!(pair, single);
    }

    #[test]
    fn duplicate_can_lift_a_subset_diluted_by_a_weak_feature() {
        // With a near-useless companion w, {f, f', w} outscores {f, w}:
        // (2s + 0)/sqrt(5) > s/sqrt(2). Only the singleton case is monotone.
        let (data, signal) = single_informative(200);
        let dup = LabeledData::from_columns(
            vec![(Cbo, signal.clone()), (Ce, signal), (Wmc, data.column(Wmc).to_vec())],
            data.labels().to_vec(),
        )
        .unwrap();
        let ev = CfsEvaluator::new(&dup, 10).unwrap();
        let fw = FeatureSubset::empty().with(Cbo).with(Wmc);
        assert!(ev.merit(fw.with(Ce)).unwrap() > ev.merit(fw).unwrap());
    }

    #[test]
    fn greedy_picks_the_label_copy() {
        let (data, _) = single_informative(100);
        let picked = greedy_stepwise_cfs(&data, 10).unwrap();
        assert!(picked.contains(Cbo));
        // SU(CBO, class) = 1, so nothing can improve on it
        assert_eq!(picked, FeatureSubset::empty().with(Cbo));
    }

    #[test]
    fn greedy_keeps_one_of_a_duplicate_pair() {
        let (data, signal) = single_informative(100);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fuzzy: Vec<f64> = signal.iter().map(|v| v + rng.random_range(0.0..4.5)).collect();
        let d = LabeledData::from_columns(
            vec![(Rfc, fuzzy.clone()), (Loc, fuzzy), (Wmc, noise(100, 6))],
            data.labels().to_vec(),
        )
        .unwrap();
        let picked = greedy_stepwise_cfs(&d, 10).unwrap();
        assert!(picked.contains(Rfc), "{picked}");
        assert!(!picked.contains(Loc), "{picked}");
    }

    #[test]
    fn greedy_is_locally_optimal_and_deterministic() {
        let n = 150;
        let y = labels(n, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let features = [Wmc, Dit, Cbo, Rfc, Lcom, Loc];
        let cols: Vec<(MetricId, Vec<f64>)> = features
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let strength = [1.5, 0.0, 1.0, 0.7, 0.3, 1.2][i];
                let col = y
                    .iter()
                    .map(|&l| if l { strength } else { 0.0 } + rng.random_range(0.0..2.0))
                    .collect();
                (m, col)
            })
            .collect();
        let data = LabeledData::from_columns(cols, y).unwrap();
        let picked = greedy_stepwise_cfs(&data, 10).unwrap();
        assert_eq!(picked, greedy_stepwise_cfs(&data, 10).unwrap());
        let ev = CfsEvaluator::new(&data, 10).unwrap();
        let best = ev.merit(picked).unwrap();
        if picked.len() > 1 {
            for m in picked.iter() {
                assert!(best >= ev.merit(picked.without(m)).unwrap(), "removing {m}");
            }
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let d = LabeledData::from_columns(vec![(Wmc, vec![1.0, 2.0, 3.0])], vec![true; 3]).unwrap();
        assert_eq!(greedy_stepwise_cfs(&d, 10), Err(FeatureError::SingleClassData));
    }
}
