use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesParams {
    pub var_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { var_floor: 1e-9 }
    }
}

/// Per-class Gaussian parameters; index 0 is clean, 1 is buggy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
    /// `log_prior − ½·Σ ln(2π·var)` per class.
    pub log_norm: [f64; 2],
}

pub(super) fn fit(x: &[f64], y: &[bool], d: usize, p: &NaiveBayesParams) -> NaiveBayesModel {
    let mut count = [0usize; 2];
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    for (row, &label) in x.chunks_exact(d).zip(y) {
        let c = label as usize;
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..2 {
        for m in &mut mean[c] {
            *m /= count[c] as f64;
        }
    }
    let mut var = [vec![0.0; d], vec![0.0; d]];
    for (row, &label) in x.chunks_exact(d).zip(y) {
        let c = label as usize;
        for ((s, v), m) in var[c].iter_mut().zip(row).zip(&mean[c]) {
            *s += (v - m) * (v - m);
        }
    }
    for c in 0..2 {
        for s in &mut var[c] {
            *s = (*s / count[c] as f64).max(p.var_floor);
        }
    }
    let n = y.len() as f64;
    let log_prior = [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()];
    let norm = |c: usize| {
        log_prior[c] - 0.5 * var[c].iter().map(|s| (std::f64::consts::TAU * s).ln()).sum::<f64>()
    };
    NaiveBayesModel {
        log_norm: [norm(0), norm(1)],
        log_prior,
        mean,
        var,
    }
}

impl NaiveBayesModel {
    pub fn log_joint(&self, class: usize, x: &[f64]) -> f64 {
        let mut acc = self.log_norm[class];
        for ((v, m), s) in x.iter().zip(&self.mean[class]).zip(&self.var[class]) {
            acc -= (v - m) * (v - m) / (2.0 * s);
        }
        acc
    }

    /// Posterior of the buggy class.
    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_joint(1, x) - self.log_joint(0, x))
    }
}
