use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Equal-frequency binning of one column.
///
/// Bin `j` holds the values in `(cut[j-1], cut[j]]`, so a value equal to a cut
/// point lands in the lower bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedColumn {
    pub bins: Vec<u16>,
    pub bin_count: usize,
    pub cut_points: Vec<f64>,
    /// Set when every value was equal; the column then has a single bin.
    pub degenerate: bool,
}

impl DiscretizedColumn {
    /// Bin of an arbitrary value under the fitted cut points.
    pub fn bin_of(&self, value: f64) -> u16 {
        bin_for(&self.cut_points, value)
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Wraps already-discrete values (e.g. class labels).
    pub fn from_labels(labels: &[bool]) -> DiscretizedColumn {
        let both = labels.iter().any(|&b| b) && labels.iter().any(|&b| !b);
        DiscretizedColumn {
            bins: labels.iter().map(|&b| b as u16).collect(),
            bin_count: 2,
            cut_points: vec![0.5],
            degenerate: !both,
        }
    }
}

pub(crate) fn bin_for(cuts: &[f64], value: f64) -> u16 {
    cuts.partition_point(|&c| c < value) as u16
}

/// Equal-frequency cut points at the empirical `b/B` quantiles.
pub(crate) fn equal_frequency_cuts(values: &[f64], bin_count: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let max = sorted[n - 1];
    let mut cuts: Vec<f64> = Vec::with_capacity(bin_count - 1);
    for b in 1..bin_count {
        let idx = b * n / bin_count;
        if idx == 0 {
            continue;
        }
        let cut = sorted[idx - 1];
        // Duplicate cuts and a cut at the maximum would leave empty bins.
        if cut < max && cuts.last().is_none_or(|&last| cut > last) {
            cuts.push(cut);
        }
    }
    cuts
}

pub fn discretize_equal_frequency(
    values: &[f64],
    bin_count: usize,
) -> Result<DiscretizedColumn, FeatureError> {
    if bin_count < 2 {
        return Err(FeatureError::InvalidBinCount(bin_count));
    }
    if values.len() < bin_count {
        return Err(FeatureError::TooFewSamples {
            needed: bin_count,
            got: values.len(),
        });
    }
    let cuts = equal_frequency_cuts(values, bin_count);
    let degenerate = values.iter().all(|&v| v == values[0]);
    Ok(DiscretizedColumn {
        bins: values.iter().map(|&v| bin_for(&cuts, v)).collect(),
        bin_count: cuts.len() + 1,
        cut_points: cuts,
        degenerate,
    })
}
