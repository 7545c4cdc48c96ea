//! Entropy-based scores over discretized columns (natural log).

use super::{DiscretizedColumn, FeatureError};

/// Entropy of a histogram. Counts are summed in sorted order so that two
/// histograms holding the same multiset of counts give bit-identical results;
/// this keeps `SU(a, a)` at exactly 1.
fn entropy_of_counts(counts: &mut [u32], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    counts.sort_unstable();
    let nf = n as f64;
    let mut acc = 0.0;
    for &c in counts.iter().filter(|&&c| c > 0) {
        let c = c as f64;
        acc += c * c.ln();
    }
    (nf.ln() - acc / nf).max(0.0)
}

pub fn entropy(a: &DiscretizedColumn) -> f64 {
    let mut counts = vec![0u32; a.bin_count];
    for &b in &a.bins {
        counts[b as usize] += 1;
    }
    entropy_of_counts(&mut counts, a.len())
}

fn joint_entropy(a: &DiscretizedColumn, b: &DiscretizedColumn) -> f64 {
    let mut counts = vec![0u32; a.bin_count * b.bin_count];
    for (&x, &y) in a.bins.iter().zip(&b.bins) {
        counts[x as usize * b.bin_count + y as usize] += 1;
    }
    entropy_of_counts(&mut counts, a.len())
}

/// I(a; b) = H(a) + H(b) − H(a, b), clamped at 0.
pub fn mutual_information(
    a: &DiscretizedColumn,
    b: &DiscretizedColumn,
) -> Result<f64, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::LengthMismatch(a.len(), b.len()));
    }
    Ok(mi_with_entropies(a, b, entropy(a), entropy(b)))
}

pub(crate) fn mi_with_entropies(
    a: &DiscretizedColumn,
    b: &DiscretizedColumn,
    ha: f64,
    hb: f64,
) -> f64 {
    (ha + hb - joint_entropy(a, b)).max(0.0)
}

/// SU = 2·I(a;b) / (H(a) + H(b)), defined as 0 when both entropies vanish.
pub fn symmetrical_uncertainty(
    a: &DiscretizedColumn,
    b: &DiscretizedColumn,
) -> Result<f64, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::LengthMismatch(a.len(), b.len()));
    }
    let (ha, hb) = (entropy(a), entropy(b));
    Ok(su_with_entropies(a, b, ha, hb))
}

pub(crate) fn su_with_entropies(
    a: &DiscretizedColumn,
    b: &DiscretizedColumn,
    ha: f64,
    hb: f64,
) -> f64 {
    let denom = ha + hb;
    if denom <= 0.0 {
        return 0.0;
    }
    (2.0 * mi_with_entropies(a, b, ha, hb) / denom).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::discretize_equal_frequency;
    use proptest::prelude::*;

    fn col(bins: &[u16]) -> DiscretizedColumn {
        let bin_count = *bins.iter().max().unwrap() as usize + 1;
        DiscretizedColumn {
            bins: bins.to_vec(),
            bin_count,
            cut_points: vec![],
            degenerate: bin_count == 1,
        }
    }

    #[test]
    fn identical_columns_have_unit_su() {
        let a = col(&[0, 1, 2, 1, 0, 2, 2]);
        assert_eq!(symmetrical_uncertainty(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn independent_columns_have_zero_su() {
        let a = col(&[0, 0, 1, 1]);
        let b = col(&[0, 1, 0, 1]);
        assert!(symmetrical_uncertainty(&a, &b).unwrap().abs() < 1e-15);
        assert!(mutual_information(&a, &b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hand_computed_joint_table() {
        // a = [0,0,1,1], b = [0,0,1,0]
        // joint cells: (0,0)=2, (1,1)=1, (1,0)=1
        // H(a) = ln 2, H(b) = ln 4 − (3/4) ln 3, H(a,b) = (3/2) ln 2
        let a = col(&[0, 0, 1, 1]);
        let b = col(&[0, 0, 1, 0]);
        let ln2 = 2f64.ln();
        let ha = ln2;
        let hb = 2.0 * ln2 - 0.75 * 3f64.ln();
        let hab = 1.5 * ln2;
        let mi = ha + hb - hab;
        let su = 2.0 * mi / (ha + hb);
        assert!((mutual_information(&a, &b).unwrap() - mi).abs() < 1e-12);
        assert!((symmetrical_uncertainty(&a, &b).unwrap() - su).abs() < 1e-12);
        assert!((su - 0.343_711_018_485_450_7).abs() < 1e-12);
    }

    #[test]
    fn constant_columns() {
        let a = col(&[0, 0, 0]);
        assert_eq!(symmetrical_uncertainty(&a, &a).unwrap(), 0.0);
        let b = col(&[0, 1, 0]);
        assert_eq!(symmetrical_uncertainty(&a, &b).unwrap(), 0.0);
        assert_eq!(mutual_information(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(symmetrical_uncertainty(&col(&[0, 1]), &col(&[0, 1, 1])).is_err());
    }

    proptest! {
        #[test]
        fn su_bounded_and_symmetric(
            pairs in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 6..60),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let a = discretize_equal_frequency(&x, 3).unwrap();
            let b = discretize_equal_frequency(&y, 3).unwrap();
            let ab = symmetrical_uncertainty(&a, &b).unwrap();
            let ba = symmetrical_uncertainty(&b, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - ba).abs() < 1e-12);
            if !a.degenerate {
                prop_assert_eq!(symmetrical_uncertainty(&a, &a).unwrap(), 1.0);
            }
        }
    }
}
