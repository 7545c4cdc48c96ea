use serde::{Deserialize, Serialize};

use super::{column_moments, sigmoid, LearnerError, LinearModel};
use crate::features::{FeatureSubset, LabeledData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogisticSolver {
    /// Damped Newton with backtracking.
    #[default]
    Newton,
    /// Batch gradient descent with step `1/L`.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub lambda: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub solver: LogisticSolver,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            lambda: 1e-8,
            tolerance: 1e-8,
            max_iterations: 500,
            solver: LogisticSolver::Newton,
        }
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `λ/2·‖w‖²` (intercept unpenalized).
fn loss(z: &[f64], y: &[bool], w: &[f64], lambda: f64) -> f64 {
    let nll: f64 = z
        .iter()
        .zip(y)
        .map(|(&z, &t)| softplus(z) - if t { z } else { 0.0 })
        .sum::<f64>()
        / z.len() as f64;
    nll + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Solves `a·x = rhs` for a symmetric positive definite `a` (row-major, m×m)
/// by Cholesky factorization. `None` when `a` is not positive definite.
fn cholesky_solve(a: &[f64], rhs: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|t| l[i * m + t] * l[j * m + t]).sum();
            if i == j {
                let v = a[i * m + i] - s;
                if !(v > 0.0 && v.is_finite()) {
                    return None;
                }
                l[i * m + i] = v.sqrt();
            } else {
                l[i * m + j] = (a[i * m + j] - s) / l[j * m + j];
            }
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        let s: f64 = (0..i).map(|t| l[i * m + t] * y[t]).sum();
        y[i] = (rhs[i] - s) / l[i * m + i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|t| l[t * m + i] * x[t]).sum();
        x[i] = (y[i] - s) / l[i * m + i];
    }
    Some(x)
}

/// Damped Newton. Each step solves the regularized Hessian system and
/// backtracks until the Armijo condition holds, so the loss never increases.
/// The intercept is coordinate 0.
fn fit_newton(xs: &[f64], y: &[bool], m: usize, p: &LogisticParams, trace: bool) -> (Vec<f64>, usize, bool, Vec<f64>) {
    let n = y.len();
    let nf = n as f64;
    let objective = |theta: &[f64], z: &mut [f64]| {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = xs[i * m..(i + 1) * m].iter().zip(theta).map(|(a, b)| a * b).sum();
        }
        loss(z, y, &theta[1..], p.lambda)
    };
    let mut theta = vec![0.0; m];
    let mut z = vec![0.0; n];
    let mut trial_z = vec![0.0; n];
    let mut current = objective(&theta, &mut z);
    let mut losses = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = vec![0.0; m];
    let mut hess = vec![0.0; m * m];
    loop {
        if trace {
            losses.push(current);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        for (i, (&zi, &t)) in z.iter().zip(y).enumerate() {
            let s = sigmoid(zi);
            let r = s - if t { 1.0 } else { 0.0 };
            let w = s * (1.0 - s);
            let row = &xs[i * m..(i + 1) * m];
            for a in 0..m {
                grad[a] += r * row[a];
                let wa = w * row[a];
                for b in 0..=a {
                    hess[a * m + b] += wa * row[b];
                }
            }
        }
        for a in 0..m {
            grad[a] /= nf;
            for b in 0..=a {
                hess[a * m + b] /= nf;
                hess[b * m + a] = hess[a * m + b];
            }
            if a > 0 {
                grad[a] += p.lambda * theta[a];
                hess[a * m + a] += p.lambda;
            }
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < p.tolerance {
            converged = true;
            break;
        }
        if iterations == p.max_iterations {
            break;
        }
        let mut jitter = 1e-10;
        let direction = loop {
            if let Some(dir) = cholesky_solve(&hess, &grad, m) {
                break dir;
            }
            for a in 0..m {
                hess[a * m + a] += jitter;
            }
            jitter *= 10.0;
        };
        let slope: f64 = grad.iter().zip(&direction).map(|(g, v)| g * v).sum();
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&direction).map(|(t, v)| t - step * v).collect();
            let value = objective(&trial, &mut trial_z);
            if value <= current - 1e-4 * step * slope {
                theta = trial;
                std::mem::swap(&mut z, &mut trial_z);
                current = value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    (theta, iterations, converged, losses)
}

/// Batch gradient descent with step `1/L`, where `L = m/4 + λ` bounds the
/// Hessian, so the loss never increases.
fn fit_gradient(xs: &[f64], y: &[bool], m: usize, p: &LogisticParams, trace: bool) -> (Vec<f64>, usize, bool, Vec<f64>) {
    let n = y.len();
    let nf = n as f64;
    let step = 1.0 / (0.25 * m as f64 + p.lambda);
    let mut theta = vec![0.0; m];
    let mut z = vec![0.0; n];
    let mut grad = vec![0.0; m];
    let mut losses = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = xs[i * m..(i + 1) * m].iter().zip(&theta).map(|(a, b)| a * b).sum();
        }
        if trace {
            losses.push(loss(&z, y, &theta[1..], p.lambda));
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (i, (&zi, &t)) in z.iter().zip(y).enumerate() {
            let r = sigmoid(zi) - if t { 1.0 } else { 0.0 };
            for (g, v) in grad.iter_mut().zip(&xs[i * m..(i + 1) * m]) {
                *g += r * v;
            }
        }
        for (a, g) in grad.iter_mut().enumerate() {
            *g /= nf;
            if a > 0 {
                *g += p.lambda * theta[a];
            }
        }
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < p.tolerance {
            converged = true;
            break;
        }
        if iterations == p.max_iterations {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= step * g;
        }
        iterations += 1;
    }
    (theta, iterations, converged, losses)
}

/// Fits on standardized columns and maps the weights back to the original
/// scale. Returns the model, dropped (constant) columns and optionally the
/// loss trace.
pub(super) fn fit(
    x: &[f64],
    y: &[bool],
    d: usize,
    p: &LogisticParams,
    trace: bool,
) -> (LinearModel, Vec<usize>, Vec<f64>) {
    let (mean, sd) = column_moments(x, d);
    let active: Vec<usize> = (0..d).filter(|&j| sd[j] > 0.0).collect();
    let dropped: Vec<usize> = (0..d).filter(|&j| sd[j] == 0.0).collect();
    let m = active.len() + 1;
    // rows carry a leading 1 for the intercept
    let mut xs = Vec::with_capacity(y.len() * m);
    for row in x.chunks_exact(d) {
        xs.push(1.0);
        xs.extend(active.iter().map(|&j| (row[j] - mean[j]) / sd[j]));
    }
    let (theta, iterations, converged, losses) = match p.solver {
        LogisticSolver::Newton => fit_newton(&xs, y, m, p, trace),
        LogisticSolver::GradientDescent => fit_gradient(&xs, y, m, p, trace),
    };
    let mut weights = vec![0.0; d];
    let mut intercept = theta[0];
    for (a, &j) in active.iter().enumerate() {
        weights[j] = theta[a + 1] / sd[j];
        intercept -= theta[a + 1] * mean[j] / sd[j];
    }
    let model = LinearModel {
        weights,
        intercept,
        link_scale: 1.0,
        iterations,
        converged,
    };
    (model, dropped, losses)
}

/// Loss after each solver step, starting from the all-zero model.
pub fn logistic_loss_trace(
    data: &LabeledData,
    subset: FeatureSubset,
    params: &LogisticParams,
) -> Result<Vec<f64>, LearnerError> {
    if subset.is_empty() {
        return Err(LearnerError::EmptySubset);
    }
    if !data.has_both_classes() {
        return Err(LearnerError::SingleClassData);
    }
    let x = data.project(subset);
    Ok(fit(&x, data.labels(), subset.len(), params, true).2)
}
