//! Loads a corpus and prints instance counts and defect rates per release.
//!
//! `cargo run --example corpus_summary -- path/to/manifest.toml`
//! Without an argument a generated corpus of the same shape is used.

use std::error::Error;
use std::path::Path;

use defectkit::corpus::{corpus_summary, Corpus, ParseOptions};
use defectkit::pipeline::summary_markdown;
use defectkit::surrogate::promise_shaped_corpus;

fn main() -> Result<(), Box<dyn Error>> {
    let raw = match std::env::args().nth(1) {
        Some(path) => Corpus::load(Path::new(&path), ParseOptions::default())?,
        None => promise_shaped_corpus(7),
    };
    let instances: usize = raw.releases.iter().map(|r| r.len()).sum();
    // log-filter the metrics and turn bug counts into labels
    let corpus = raw.preprocess()?;
    print!("{}", summary_markdown(&corpus_summary(&corpus)?));
    println!("\n{} projects, {} releases, {instances} instances", corpus.projects().len(), corpus.len());
    Ok(())
}
