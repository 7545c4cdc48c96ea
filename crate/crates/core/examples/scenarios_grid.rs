//! Runs a small WPDP and CPDP grid and prints the result table.
//!
//! `cargo run --release --example scenarios_grid`

use std::error::Error;

use defectkit::learners::{ClassifierKind, ClassifierSpec};
use defectkit::scenarios::{run_grid, GridSpec, MetricSet, MetricSetRule, ScenarioKind, ScenarioSpec};
use defectkit::surrogate::synthetic_corpus;

fn main() -> Result<(), Box<dyn Error>> {
    let layout: Vec<(String, String, usize, usize)> = [("alpha", 3), ("beta", 2), ("gamma", 2)]
        .iter()
        .flat_map(|&(p, n)| (0..n).map(move |v| (p.to_string(), format!("1.{v}"), 120 + 20 * v, 30 + 5 * v)))
        .collect();
    let corpus = synthetic_corpus(&layout, 3).preprocess()?;
    let mut cpdp = ScenarioSpec::new(ScenarioKind::CpdpExhaustive);
    cpdp.cpdp_max_releases = 2;
    let grid = GridSpec::new(
        vec![ScenarioSpec::new(ScenarioKind::WpdpNearest), ScenarioSpec::new(ScenarioKind::WpdpAllHistory), cpdp],
        vec![ClassifierSpec::default_for(ClassifierKind::NaiveBayes, 1), ClassifierSpec::default_for(ClassifierKind::Logistic, 1)],
        vec![
            MetricSet::new("ALL", MetricSetRule::All),
            MetricSet::new("FILTER", MetricSetRule::Filter),
            MetricSet::new("MIN", MetricSetRule::Fixed("CBO+LOC+LCOM".parse()?)),
        ],
    );
    let table = run_grid(&corpus, &grid)?;
    print!("{}", table.to_csv());
    println!("\n{} rows, sha256 {}", table.rows.len(), table.digest());
    Ok(())
}
