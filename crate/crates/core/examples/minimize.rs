//! Minimum metric subset: correlation matrix, strong pairs, ranked combinations.
//!
//! `cargo run --release --example minimize -- [manifest.toml] [phi]`

use std::error::Error;
use std::path::Path;

use defectkit::config::CoveragePopulation;
use defectkit::corpus::{Corpus, ParseOptions};
use defectkit::features::DEFAULT_BINS;
use defectkit::pipeline::{minimize_markdown, minimize_report, population, select_filters, topk_report};
use defectkit::scenarios::{ScenarioKind, ScenarioSpec};
use defectkit::simplify::{enumerate_admissible, strong_pairs, CorrelationMatrix, DEFAULT_K_MAX, DEFAULT_PHI};
use defectkit::surrogate::promise_shaped_corpus;

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let corpus = match args.first().filter(|a| a.ends_with(".toml")) {
        Some(path) => Corpus::load(Path::new(path), ParseOptions::default())?,
        None => promise_shaped_corpus(7),
    }
    .preprocess()?;
    let phi = match args.last().and_then(|a| a.parse::<f64>().ok()) {
        Some(phi) => phi,
        None => DEFAULT_PHI,
    };

    // a fixed matrix first: five metrics, upper triangle row by row
    let universe = "CBO+RFC+LCOM+CE+LOC".parse()?;
    let r = CorrelationMatrix::from_upper(universe, &[0.487, 0.395, 0.622, 0.379, 0.616, 0.682, 0.909, 0.375, 0.49, 0.587])?;
    let pairs = strong_pairs(&r, phi, false)?;
    let admissible = enumerate_admissible(universe, &pairs)?;
    println!("fixed matrix: {} strong pairs, {} admissible combinations\n", pairs.len(), admissible.len());

    let filters = select_filters(&corpus, DEFAULT_BINS);
    let subsets = population(&corpus, &filters, CoveragePopulation::All, &[]);
    let top5 = topk_report(&subsets, DEFAULT_K_MAX, Some(5))?;
    let scenario = ScenarioSpec::new(ScenarioKind::WpdpNearest);
    let report = minimize_report(&corpus, top5.subset, &scenario, phi, false, &subsets)?;
    print!("{}", minimize_markdown(&report));
    Ok(())
}
