use serde::{Deserialize, Serialize};

use super::StatsError;

fn sorted(sample: &[f64]) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Linear-interpolation quantile (`(n − 1)·q` positioning).
pub fn quantile(sample: &[f64], q: f64) -> Result<f64, StatsError> {
    Ok(quantile_sorted(&sorted(sample)?, q.clamp(0.0, 1.0)))
}

/// Median; the mean of the two central values for even lengths.
pub fn median(sample: &[f64]) -> Result<f64, StatsError> {
    let s = sorted(sample)?;
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

/// Five-number summary plus Tukey fences at 1.5·IQR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn boxplot(sample: &[f64]) -> Result<BoxplotSummary, StatsError> {
    let s = sorted(sample)?;
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v)).collect();
    Ok(BoxplotSummary {
        min: s[0],
        q1,
        median: median(&s)?,
        q3,
        max: s[s.len() - 1],
        whisker_low: inside.first().copied().unwrap_or(q1),
        whisker_high: inside.last().copied().unwrap_or(q3),
        outliers: s.iter().copied().filter(|v| !(lo_fence..=hi_fence).contains(v)).collect(),
    })
}
