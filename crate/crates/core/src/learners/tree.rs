use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub min_leaf: usize,
    pub max_depth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: 2,
            max_depth: 20,
        }
    }
}

/// Flat tree; children are indices into the node list, root at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        score: f64,
        instances: usize,
    },
    Split {
        /// Position within the model's subset.
        feature: usize,
        /// Values `<= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

pub(super) fn score(nodes: &[TreeNode], x: &[f64]) -> f64 {
    let mut at = 0;
    loop {
        match nodes[at] {
            TreeNode::Leaf { score, .. } => return score,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => at = if x[feature] <= threshold { left } else { right },
        }
    }
}

/// `n·H(pos/n)` in nats from a table of `c·ln c`.
fn scaled_entropy(xlnx: &[f64], pos: usize, n: usize) -> f64 {
    xlnx[n] - xlnx[pos] - xlnx[n - pos]
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

/// Per feature, the rows of every open node as contiguous segments sorted
/// by that feature; values are stored alongside to keep scans sequential.
struct Builder<'a> {
    y: &'a [bool],
    d: usize,
    n: usize,
    params: TreeParams,
    nodes: Vec<TreeNode>,
    values: Vec<f64>,
    rows: Vec<u32>,
    goes_left: Vec<bool>,
    scratch_values: Vec<f64>,
    scratch_rows: Vec<u32>,
    xlnx: Vec<f64>,
}

impl Builder<'_> {
    /// Best midpoint threshold of one feature over `lo..hi` by information gain.
    fn best_threshold(&self, feature: usize, lo: usize, hi: usize, pos: usize, parent_h: f64) -> Option<Candidate> {
        let base = feature * self.n;
        let values = &self.values[base + lo..base + hi];
        let rows = &self.rows[base + lo..base + hi];
        let n = hi - lo;
        let min_leaf = self.params.min_leaf;
        let mut left_pos = 0;
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            if self.y[rows[i] as usize] {
                left_pos += 1;
            }
            let left_n = i + 1;
            let (a, b) = (values[i], values[i + 1]);
            if a == b || left_n < min_leaf || n - left_n < min_leaf {
                continue;
            }
            let right_n = n - left_n;
            let child_h = (scaled_entropy(&self.xlnx, left_pos, left_n)
                + scaled_entropy(&self.xlnx, pos - left_pos, right_n))
                / n as f64;
            let gain = parent_h - child_h;
            if best.as_ref().is_none_or(|c| gain > c.gain) {
                let pl = left_n as f64 / n as f64;
                let split_info = -(pl * pl.ln() + (1.0 - pl) * (1.0 - pl).ln());
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                    ratio: gain / split_info,
                });
            }
        }
        best
    }

    /// Stable partition of every feature's `lo..hi` segment; returns the split point.
    fn partition(&mut self, lo: usize, hi: usize) -> usize {
        let mut mid = lo;
        for f in 0..self.d {
            let base = f * self.n;
            let mut l = base + lo;
            let mut r = 0;
            for i in base + lo..base + hi {
                let (v, row) = (self.values[i], self.rows[i]);
                if self.goes_left[row as usize] {
                    self.values[l] = v;
                    self.rows[l] = row;
                    l += 1;
                } else {
                    self.scratch_values[r] = v;
                    self.scratch_rows[r] = row;
                    r += 1;
                }
            }
            self.values[l..l + r].copy_from_slice(&self.scratch_values[..r]);
            self.rows[l..l + r].copy_from_slice(&self.scratch_rows[..r]);
            mid = l - base;
        }
        mid
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let n = hi - lo;
        let pos = self.rows[lo..hi].iter().filter(|&&r| self.y[r as usize]).count();
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            score: pos as f64 / n as f64,
            instances: n,
        });
        if pos == 0 || pos == n || depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return at;
        }
        let parent_h = scaled_entropy(&self.xlnx, pos, n) / n as f64;
        let candidates: Vec<Candidate> = (0..self.d)
            .filter_map(|f| self.best_threshold(f, lo, hi, pos, parent_h))
            .filter(|c| c.gain > 1e-12)
            .collect();
        if candidates.is_empty() {
            return at;
        }
        // gain ratio among candidates with at least average gain
        let mean_gain = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
        let mut chosen: Option<&Candidate> = None;
        for c in candidates.iter().filter(|c| c.gain >= mean_gain - 1e-12) {
            if chosen.is_none_or(|b| c.ratio > b.ratio) {
                chosen = Some(c);
            }
        }
        let chosen = chosen.expect("the best-gain candidate clears the mean");
        let (feature, threshold) = (chosen.feature, chosen.threshold);
        let base = feature * self.n;
        for i in base + lo..base + hi {
            self.goes_left[self.rows[i] as usize] = self.values[i] <= threshold;
        }
        let mid = self.partition(lo, hi);
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Binary gain-ratio tree without pruning.
pub(super) fn fit(x: &[f64], y: &[bool], d: usize, p: &TreeParams) -> Vec<TreeNode> {
    let n = y.len();
    let mut values = Vec::with_capacity(n * d);
    let mut rows = Vec::with_capacity(n * d);
    for f in 0..d {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_by(|&a, &b| x[a as usize * d + f].total_cmp(&x[b as usize * d + f]));
        values.extend(idx.iter().map(|&r| x[r as usize * d + f]));
        rows.extend(idx);
    }
    let mut b = Builder {
        y,
        d,
        n,
        params: *p,
        nodes: Vec::new(),
        values,
        rows,
        goes_left: vec![false; n],
        scratch_values: vec![0.0; n],
        scratch_rows: vec![0; n],
        xlnx: (0..=n).map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).ln() }).collect(),
    };
    b.grow(0, n, 0);
    b.nodes
}
