use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::METRIC_COUNT;
use crate::features::discretize::{bin_for, equal_frequency_cuts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableParams {
    pub bins: usize,
}

impl Default for TableParams {
    fn default() -> Self {
        TableParams { bins: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub key: Vec<u16>,
    pub clean: u32,
    pub buggy: u32,
}

/// Equal-frequency cells over every feature of the subset. Cells are sorted
/// by key; an unseen cell scores the training buggy fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableModel {
    pub cut_points: Vec<Vec<f64>>,
    pub cells: Vec<TableCell>,
    pub default_score: f64,
}

pub(super) fn fit(x: &[f64], y: &[bool], d: usize, p: &TableParams) -> TableModel {
    let n = y.len();
    let cut_points: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let col: Vec<f64> = x.chunks_exact(d).map(|r| r[j]).collect();
            equal_frequency_cuts(&col, p.bins.min(n))
        })
        .collect();
    let mut counts: BTreeMap<Vec<u16>, (u32, u32)> = BTreeMap::new();
    for (row, &label) in x.chunks_exact(d).zip(y) {
        let key = row.iter().zip(&cut_points).map(|(&v, c)| bin_for(c, v)).collect();
        let e = counts.entry(key).or_insert((0, 0));
        if label {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
    }
    let positives = y.iter().filter(|&&b| b).count();
    TableModel {
        cut_points,
        cells: counts
            .into_iter()
            .map(|(key, (clean, buggy))| TableCell { key, clean, buggy })
            .collect(),
        default_score: positives as f64 / n as f64,
    }
}

impl TableModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut key = [0u16; METRIC_COUNT];
        for ((k, &v), c) in key.iter_mut().zip(x).zip(&self.cut_points) {
            *k = bin_for(c, v);
        }
        let key = &key[..x.len()];
        match self.cells.binary_search_by(|c| c.key.as_slice().cmp(key)) {
            Ok(i) => {
                let c = &self.cells[i];
                c.buggy as f64 / (c.buggy + c.clean) as f64
            }
            Err(_) => self.default_score,
        }
    }
}
