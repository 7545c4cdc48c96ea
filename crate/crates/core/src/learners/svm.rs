use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{column_moments, LearnerError, LinearModel};
use crate::features::{FeatureSubset, LabeledData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 200,
        }
    }
}

struct Standardized {
    /// Row-major, active columns plus a trailing constant 1.
    rows: Vec<f64>,
    width: usize,
    active: Vec<usize>,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

fn standardize(x: &[f64], d: usize) -> Standardized {
    let (mean, sd) = column_moments(x, d);
    let active: Vec<usize> = (0..d).filter(|&j| sd[j] > 0.0).collect();
    let width = active.len() + 1;
    let mut rows = Vec::with_capacity(x.len() / d * width);
    for row in x.chunks_exact(d) {
        rows.extend(active.iter().map(|&j| (row[j] - mean[j]) / sd[j]));
        rows.push(1.0);
    }
    Standardized {
        rows,
        width,
        active,
        mean,
        sd,
    }
}

fn objective(s: &Standardized, y: &[bool], w: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = s
        .rows
        .chunks_exact(s.width)
        .zip(y)
        .map(|(row, &t)| {
            let m = w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            (1.0 - if t { m } else { -m }).max(0.0)
        })
        .sum::<f64>()
        / y.len() as f64;
    hinge + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Pegasos with the scaled-vector trick and projection onto the
/// `1/√λ` ball. The bias rides along as a constant feature.
fn pegasos(s: &Standardized, y: &[bool], p: &SvmParams, seed: u64, mut on_epoch: Option<&mut dyn FnMut(&[f64])>) -> Vec<f64> {
    let n = y.len();
    let width = s.width;
    let row_sq: Vec<f64> = s.rows.chunks_exact(width).map(|r| r.iter().map(|a| a * a).sum()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut v = vec![0.0; width];
    let mut scale = 1.0;
    let mut sq_norm = 0.0;
    let radius = 1.0 / p.lambda.sqrt();
    let radius_sq = 1.0 / p.lambda;
    let mut t = 0u64;
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let inv_t = 1.0 / t as f64;
            let eta = inv_t / p.lambda;
            let row = &s.rows[i * width..(i + 1) * width];
            let sign = if y[i] { 1.0 } else { -1.0 };
            let mut dot: f64 = v.iter().zip(row).map(|(a, b)| a * b).sum();
            let margin = sign * scale * dot;
            scale *= 1.0 - inv_t;
            if scale == 0.0 {
                v.iter_mut().for_each(|a| *a = 0.0);
                scale = 1.0;
                sq_norm = 0.0;
                dot = 0.0;
            }
            if margin < 1.0 {
                let c = eta * sign / scale;
                sq_norm += 2.0 * c * dot + c * c * row_sq[i];
                for (a, b) in v.iter_mut().zip(row) {
                    *a += c * b;
                }
            }
            let sq = sq_norm.max(0.0);
            if scale * scale * sq > radius_sq {
                scale *= radius / (scale * sq.sqrt());
            }
        }
        sq_norm = v.iter().map(|a| a * a).sum();
        if let Some(f) = on_epoch.as_mut() {
            let w: Vec<f64> = v.iter().map(|a| a * scale).collect();
            f(&w);
        }
    }
    v.iter().map(|a| a * scale).collect()
}

pub(super) fn fit(x: &[f64], y: &[bool], d: usize, p: &SvmParams, seed: u64) -> LinearModel {
    let s = standardize(x, d);
    let w = pegasos(&s, y, p, seed, None);
    let mut weights = vec![0.0; d];
    let mut intercept = w[s.width - 1];
    for (a, &j) in s.active.iter().enumerate() {
        weights[j] = w[a] / s.sd[j];
        intercept -= w[a] * s.mean[j] / s.sd[j];
    }
    LinearModel {
        weights,
        intercept,
        link_scale: 2.0,
        iterations: p.epochs * y.len(),
        converged: true,
    }
}

/// Regularized hinge objective (standardized space) at the end of each epoch.
pub fn svm_objective_trace(
    data: &LabeledData,
    subset: FeatureSubset,
    params: &SvmParams,
    seed: u64,
) -> Result<Vec<f64>, LearnerError> {
    if subset.is_empty() {
        return Err(LearnerError::EmptySubset);
    }
    if !data.has_both_classes() {
        return Err(LearnerError::SingleClassData);
    }
    let s = standardize(&data.project(subset), subset.len());
    let mut trace = vec![objective(&s, data.labels(), &vec![0.0; s.width], params.lambda)];
    {
        let mut record = |w: &[f64]| trace.push(objective(&s, data.labels(), w, params.lambda));
        pegasos(&s, data.labels(), params, seed, Some(&mut record));
    }
    Ok(trace)
}
