use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::StatsError;

/// Largest effective sample size that gets the exact null distribution.
pub const EXACT_LIMIT: usize = 20;
/// Fewest non-zero differences accepted.
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `a − b`.
    pub w_plus: f64,
    pub n: usize,
    pub p: f64,
    pub method: WilcoxonMethod,
}

/// Non-zero differences with doubled average ranks of their magnitudes.
fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<u64>), StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&d| d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut rank2 = vec![0u64; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i+1..=j share the average rank (i+1+j)/2
        for &o in &order[i..j] {
            rank2[o] = (i + 1 + j) as u64;
        }
        i = j;
    }
    Ok((diffs, rank2))
}

/// Exact two-sided p: the sign-flip distribution of `W+` counted by dynamic
/// programming over doubled ranks. Usable up to n = 62.
pub fn wilcoxon_exact_p(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let (diffs, rank2) = signed_ranks(a, b)?;
    Ok(exact_from_ranks(&diffs, &rank2))
}

fn exact_from_ranks(diffs: &[f64], rank2: &[u64]) -> f64 {
    let total: u64 = rank2.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in rank2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w2: usize = diffs
        .iter()
        .zip(rank2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r as usize)
        .sum();
    let low: u64 = counts[..=w2].iter().sum();
    let high: u64 = counts[w2..].iter().sum();
    let p = 2.0 * low.min(high) as f64 / (diffs.len() as f64).exp2();
    p.min(1.0)
}

/// Two-sided signed-rank test on paired samples. Zero differences are
/// dropped and tied magnitudes share average ranks. Effective sizes up to
/// [`EXACT_LIMIT`] use the exact distribution; larger ones the normal
/// approximation with continuity and tie corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    let (diffs, rank2) = signed_ranks(a, b)?;
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Err(StatsError::TooFewPairs {
            needed: MIN_PAIRS,
            got: n,
        });
    }
    let w_plus = diffs
        .iter()
        .zip(&rank2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r as f64)
        .sum::<f64>()
        / 2.0;
    if n <= EXACT_LIMIT {
        return Ok(WilcoxonResult {
            w_plus,
            n,
            p: exact_from_ranks(&diffs, &rank2),
            method: WilcoxonMethod::Exact,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = rank2.clone();
    sorted.sort_unstable();
    for chunk in sorted.chunk_by(|x, y| x == y) {
        let t = chunk.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(WilcoxonResult {
        w_plus,
        n,
        p,
        method: WilcoxonMethod::Normal,
    })
}

/// `(#{a_i > b_j} − #{a_i < b_j}) / (|a|·|b|)`; negative when `b` tends higher.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut balance: i64 = 0;
    for x in a {
        for y in b {
            if x > y {
                balance += 1;
            } else if x < y {
                balance -= 1;
            }
        }
    }
    Ok(balance as f64 / (a.len() * b.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counts sign assignments at least as far from the null mean.
    fn brute_force_p(d: &[f64]) -> f64 {
        let zero = vec![0.0; d.len()];
        let (diffs, rank2) = signed_ranks(d, &zero).unwrap();
        let n = diffs.len();
        let total: i64 = rank2.iter().map(|&r| r as i64).sum();
        let observed: i64 = diffs.iter().zip(&rank2).filter(|(x, _)| **x > 0.0).map(|(_, &r)| r as i64).sum();
        let dev = (2 * observed - total).abs();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: i64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| rank2[i] as i64).sum();
            if (2 * w - total).abs() >= dev {
                hits += 1;
            }
        }
        hits as f64 / (n as f64).exp2()
    }

    #[test]
    fn all_zero_is_an_error() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a), Err(StatsError::AllZeroDifferences));
    }

    #[test]
    fn six_distinct_differences() {
        let a = [1.5, 2.0, 0.7, 4.1, 3.3, 2.2];
        let b = [1.0, 2.8, 0.4, 3.0, 1.2, 2.0];
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.p, brute_force_p(&d));
        // ranks of |d| = .5 .8 .3 1.1 2.1 .2 → 3 4 2 5 6 1; only 0.8 is negative
        assert_eq!(r.w_plus, 17.0);
        // 7 of 64 subsets of {1..6} sum to at most 4
        assert_eq!(r.p, 14.0 / 64.0);
    }

    const A30: [f64; 30] = [
        57., 53., 74., 68., 29., 62., 77., 65., 70., 76., 58., 44., 68., 40., 66., 51., 29., 38., 66., 59.,
        61., 29., 22., 72., 73., 65., 77., 52., 60., 47.,
    ];
    const B30: [f64; 30] = [
        64., 48., 81., 75., 20., 60., 70., 56., 62., 71., 60., 38., 71., 45., 58., 42., 27., 44., 65., 50.,
        66., 22., 29., 65., 80., 58., 83., 51., 53., 46.,
    ];

    #[test]
    fn thirty_pairs_normal_close_to_exact() {
        let r = wilcoxon_signed_rank(&A30, &B30).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert_eq!(r.w_plus, 310.5);
        // offline exact enumeration and high-precision normal tail
        let exact = 0.108_698_502_182_960_51;
        assert!((wilcoxon_exact_p(&A30, &B30).unwrap() - exact).abs() < 1e-15);
        assert!((r.p - 0.109_054_420_148_314_96).abs() < 1e-9);
        assert!((r.p - exact).abs() < 0.005);
    }

    #[test]
    fn too_few_pairs() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.5, 4.5, 5.5]);
        assert_eq!(r, Err(StatsError::TooFewPairs { needed: 5, got: 3 }));
    }

    #[test]
    fn cliffs_examples() {
        assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cliffs_delta(&[2.0, 3.0, 4.0], &[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cliffs_delta(&[1.0, 1.0], &[2.0]).unwrap(), -1.0);
        assert!(cliffs_delta(&[], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(d in prop::collection::vec(-6i32..6, 5..12)) {
            let a: Vec<f64> = d.iter().map(|&x| x as f64).collect();
            let zero = vec![0.0; a.len()];
            prop_assume!(a.iter().filter(|&&x| x != 0.0).count() >= 5);
            let r = wilcoxon_signed_rank(&a, &zero).unwrap();
            prop_assert_eq!(r.p, brute_force_p(&a));
        }

        #[test]
        fn wilcoxon_symmetric(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 5..40)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ab = wilcoxon_signed_rank(&a, &b).unwrap();
            let ba = wilcoxon_signed_rank(&b, &a).unwrap();
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
            prop_assert!(ab.p > 0.0 && ab.p <= 1.0);
        }

        #[test]
        fn cliffs_antisymmetric_and_shift_free(
            a in prop::collection::vec(-50i32..50, 1..15),
            b in prop::collection::vec(-50i32..50, 1..15),
            shift in -20i32..20,
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let d = cliffs_delta(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&d));
            prop_assert_eq!(d, -cliffs_delta(&b, &a).unwrap());
            let sa: Vec<f64> = a.iter().map(|x| x + shift as f64).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift as f64).collect();
            prop_assert_eq!(cliffs_delta(&sa, &sb).unwrap(), d);
        }
    }
}
