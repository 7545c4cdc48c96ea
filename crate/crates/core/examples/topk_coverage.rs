//! Occurrence tally of the FILTER subsets and the coverage curve over k.
//!
//! `cargo run --release --example topk_coverage -- [manifest.toml]`

use std::error::Error;
use std::path::Path;

use defectkit::config::CoveragePopulation;
use defectkit::corpus::{Corpus, ParseOptions};
use defectkit::features::DEFAULT_BINS;
use defectkit::pipeline::{population, select_filters, topk_markdown, topk_report};
use defectkit::simplify::{coverage, DEFAULT_K_MAX};
use defectkit::surrogate::promise_shaped_corpus;

fn main() -> Result<(), Box<dyn Error>> {
    let corpus = match std::env::args().nth(1) {
        Some(path) => Corpus::load(Path::new(&path), ParseOptions::default())?,
        None => promise_shaped_corpus(7),
    }
    .preprocess()?;
    let filters = select_filters(&corpus, DEFAULT_BINS);
    let subsets = population(&corpus, &filters, CoveragePopulation::All, &[]);
    let report = topk_report(&subsets, DEFAULT_K_MAX, None)?;
    print!("{}", topk_markdown(&report));

    // coverage of any candidate, not only Top-k
    let candidate = "CBO+LOC+LCOM".parse()?;
    println!("\ncoverage of {candidate}: {:.3}", coverage(&subsets, candidate)?);
    Ok(())
}
