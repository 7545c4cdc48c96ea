//! Statistical comparison of two metric sets: medians, signed-rank test,
//! Cliff's delta and one-way ANOVA.
//!
//! `cargo run --example compare_methods`

use std::error::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use defectkit::stats::{anova_oneway, boxplot, compare_methods, measures, Measure, Outcome, PairedRow, DEFAULT_ALPHA};

fn main() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut all = Vec::new();
    let mut min = Vec::new();
    for target in 0..24 {
        let tp = rng.random_range(10..40);
        let fn_ = rng.random_range(5..30);
        let fp = rng.random_range(5..30);
        let key = format!("release-{target}");
        all.push(PairedRow { key: key.clone(), measures: measures(&Outcome::new(tp, fp, 200, fn_)) });
        // the smaller set trades a few hits for fewer false alarms
        let lost = rng.random_range(0..4).min(tp);
        min.push(PairedRow { key, measures: measures(&Outcome::new(tp - lost, fp.saturating_sub(3), 203, fn_ + lost)) });
    }
    let report = compare_methods("ALL", &all, "MIN", &min, DEFAULT_ALPHA)?;
    println!("| Measure | median ALL | median MIN | ratio | p | Cliff's d | acceptable |\n|---|---:|---:|---:|---:|---:|---|");
    for c in &report.measures {
        let ratio = c.ratio.map_or("n/a".into(), |r| format!("{r:.3}"));
        let p = c.wilcoxon.p().map_or("n/a".into(), |p| format!("{p:.4}"));
        println!(
            "| {} | {:.3} | {:.3} | {ratio} | {p} | {:.3} | {} |",
            c.measure.name(), c.median_a, c.median_b, c.cliffs_d, c.acceptable
        );
    }

    let f_of = |rows: &[PairedRow]| rows.iter().map(|r| Measure::FMeasure.of(&r.measures)).collect::<Vec<_>>();
    let anova = anova_oneway(&[f_of(&all), f_of(&min)])?;
    println!("\nANOVA on F: F = {:.3}, p = {:.4}", anova.f, anova.p);
    let b = boxplot(&f_of(&min))?;
    println!("MIN F quartiles: {:.3} {:.3} {:.3}", b.q1, b.median, b.q3);
    Ok(())
}
