//! Max-relevance and minimal-redundancy-maximal-relevance selection.

use crate::corpus::{MetricId, METRIC_COUNT};

use super::discretize::discretize_equal_frequency;
use super::information::{entropy, mi_with_entropies};
use super::{DiscretizedColumn, FeatureError, FeatureSubset, LabeledData};

struct MiTable {
    columns: Vec<DiscretizedColumn>,
    entropies: Vec<f64>,
    relevance: [f64; METRIC_COUNT],
}

impl MiTable {
    fn new(data: &LabeledData, bins: usize) -> Result<MiTable, FeatureError> {
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
        let entropies: Vec<f64> = columns.iter().map(entropy).collect();
        let class = DiscretizedColumn::from_labels(data.labels());
        let hc = entropy(&class);
        let mut relevance = [0.0; METRIC_COUNT];
        for i in 0..METRIC_COUNT {
            relevance[i] = mi_with_entropies(&columns[i], &class, entropies[i], hc);
        }
        Ok(MiTable {
            columns,
            entropies,
            relevance,
        })
    }

    fn between(&self, i: usize, j: usize) -> f64 {
        mi_with_entropies(
            &self.columns[i],
            &self.columns[j],
            self.entropies[i],
            self.entropies[j],
        )
    }
}

fn check_k(k: usize) -> Result<(), FeatureError> {
    if (1..=METRIC_COUNT).contains(&k) {
        Ok(())
    } else {
        Err(FeatureError::InvalidK(k))
    }
}

/// The `k` metrics with the largest mutual information with the class.
pub fn max_rel(data: &LabeledData, k: usize, bins: usize) -> Result<FeatureSubset, FeatureError> {
    check_k(k)?;
    let table = MiTable::new(data, bins)?;
    let mut order: Vec<usize> = (0..METRIC_COUNT).collect();
    // stable sort keeps canonical order among ties
    order.sort_by(|&a, &b| table.relevance[b].total_cmp(&table.relevance[a]));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| MetricId::ALL[i])
        .collect())
}

/// Greedy mRMR; returns the metrics in selection order.
pub fn mrmr_order(
    data: &LabeledData,
    k: usize,
    bins: usize,
) -> Result<Vec<MetricId>, FeatureError> {
    check_k(k)?;
    let table = MiTable::new(data, bins)?;
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    // redundancy_sum[i] = Σ_{s ∈ selected} I(i; s)
    let mut redundancy_sum = [0.0; METRIC_COUNT];
    while selected.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..METRIC_COUNT {
            if selected.contains(&i) {
                continue;
            }
            let score = if selected.is_empty() {
                table.relevance[i]
            } else {
                table.relevance[i] - redundancy_sum[i] / selected.len() as f64
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("k ≤ 20 leaves a candidate");
        selected.push(pick);
        for (i, r) in redundancy_sum.iter_mut().enumerate() {
            if !selected.contains(&i) {
                *r += table.between(i, pick);
            }
        }
    }
    Ok(selected.into_iter().map(|i| MetricId::ALL[i]).collect())
}

pub fn mrmr(data: &LabeledData, k: usize, bins: usize) -> Result<FeatureSubset, FeatureError> {
    Ok(mrmr_order(data, k, bins)?.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{mutual_information, DiscretizedColumn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use MetricId::*;

    fn five_feature(seed: u64) -> (LabeledData, [MetricId; 5]) {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let feats = [Wmc, Cbo, Rfc, Lcom, Loc];
        let strengths = [0.2, 2.0, 1.0, 0.0, 1.4];
        let mut cols = Vec::new();
        for (f, s) in feats.iter().zip(strengths) {
            let c: Vec<f64> = y
                .iter()
                .map(|&l| if l { s } else { 0.0 } + rng.random_range(0.0..3.0))
                .collect();
            cols.push((*f, c));
        }
        // make LOC partly redundant with CBO
        let cbo = cols[1].1.clone();
        for (v, c) in cols[4].1.iter_mut().zip(&cbo) {
            *v = 0.5 * *v + 0.8 * c;
        }
        (LabeledData::from_columns(cols, y).unwrap(), feats)
    }

    fn disc(data: &LabeledData, m: MetricId) -> DiscretizedColumn {
        discretize_equal_frequency(data.column(m), 10).unwrap()
    }

    #[test]
    fn max_rel_matches_brute_force_ranking() {
        let (data, _) = five_feature(3);
        let class = DiscretizedColumn::from_labels(data.labels());
        let mut scored: Vec<(MetricId, f64)> = MetricId::ALL
            .iter()
            .map(|&m| (m, mutual_information(&disc(&data, m), &class).unwrap()))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let want: FeatureSubset = scored.iter().take(3).map(|s| s.0).collect();
        assert_eq!(max_rel(&data, 3, 10).unwrap(), want);
    }

    #[test]
    fn max_rel_edges() {
        let (data, _) = five_feature(4);
        assert_eq!(max_rel(&data, 20, 10).unwrap(), FeatureSubset::all());
        assert_eq!(max_rel(&data, 0, 10), Err(FeatureError::InvalidK(0)));
        assert_eq!(max_rel(&data, 21, 10), Err(FeatureError::InvalidK(21)));
        for k in 1..20 {
            assert!(max_rel(&data, k, 10).unwrap().is_subset_of(max_rel(&data, k + 1, 10).unwrap()));
        }
    }

    #[test]
    fn mrmr_first_pick_is_max_rel() {
        let (data, _) = five_feature(5);
        assert_eq!(mrmr(&data, 1, 10).unwrap(), max_rel(&data, 1, 10).unwrap());
    }

    #[test]
    fn mrmr_matches_replayed_recurrence() {
        let (data, _) = five_feature(6);
        let class = DiscretizedColumn::from_labels(data.labels());
        let mi = |a: MetricId, b: MetricId| mutual_information(&disc(&data, a), &disc(&data, b)).unwrap();
        let rel = |a: MetricId| mutual_information(&disc(&data, a), &class).unwrap();
        let mut chosen: Vec<MetricId> = Vec::new();
        for _ in 0..3 {
            let mut best: Option<(MetricId, f64)> = None;
            for m in MetricId::ALL {
                if chosen.contains(&m) {
                    continue;
                }
                let red = if chosen.is_empty() {
                    0.0
                } else {
                    chosen.iter().map(|&s| mi(m, s)).sum::<f64>() / chosen.len() as f64
                };
                let score = rel(m) - red;
                if best.map_or(true, |(_, b)| score > b + 1e-12) {
                    best = Some((m, score));
                }
            }
            chosen.push(best.unwrap().0);
        }
        assert_eq!(mrmr_order(&data, 3, 10).unwrap(), chosen);
    }

    #[test]
    fn mrmr_prefers_independent_over_duplicate() {
        let n = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let f: Vec<f64> = y.iter().map(|&l| if l { 2.5 } else { 0.0 } + rng.random_range(0.0..3.0)).collect();
        let g: Vec<f64> = y.iter().map(|&l| if l { 1.5 } else { 0.0 } + rng.random_range(0.0..3.0)).collect();
        // every other metric is independent noise
        let mut cols: Vec<(MetricId, Vec<f64>)> = MetricId::ALL
            .iter()
            .map(|&m| (m, (0..n).map(|_| rng.random_range(0.0..3.0)).collect()))
            .collect();
        cols[Cbo.index()].1 = f.clone();
        cols[Rfc.index()].1 = f;
        cols[Loc.index()].1 = g;
        let data = LabeledData::from_columns(cols, y).unwrap();
        let class = DiscretizedColumn::from_labels(data.labels());
        let rel = |m| mutual_information(&disc(&data, m), &class).unwrap();
        let red = |a, b| mutual_information(&disc(&data, a), &disc(&data, b)).unwrap();
        // construction check: the copy's net score is below the weaker feature's relevance
        assert!(rel(Rfc) - red(Rfc, Cbo) < rel(Loc));
        let got = mrmr(&data, 2, 10).unwrap();
        assert_eq!(got, FeatureSubset::empty().with(Cbo).with(Loc));
        assert_eq!(max_rel(&data, 2, 10).unwrap(), FeatureSubset::empty().with(Cbo).with(Rfc));
    }
}
