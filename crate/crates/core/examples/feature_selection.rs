//! Greedy CFS subset and mRMR ranking for each release.
//!
//! `cargo run --release --example feature_selection -- [manifest.toml]`

use std::error::Error;
use std::path::Path;

use defectkit::corpus::{Corpus, ParseOptions};
use defectkit::features::{cfs_merit, greedy_stepwise_cfs, mrmr, LabeledData, DEFAULT_BINS};
use defectkit::surrogate::promise_shaped_corpus;

fn main() -> Result<(), Box<dyn Error>> {
    let corpus = match std::env::args().nth(1) {
        Some(path) => Corpus::load(Path::new(&path), ParseOptions::default())?,
        None => promise_shaped_corpus(7),
    }
    .preprocess()?;
    println!("| Release | CFS subset | merit | mRMR top 3 |\n|---|---|---:|---|");
    for release in &corpus.releases {
        let data = LabeledData::from_releases([release])?;
        match greedy_stepwise_cfs(&data, DEFAULT_BINS) {
            Ok(subset) => {
                let merit = cfs_merit(subset, &data, DEFAULT_BINS)?;
                let ranked = mrmr(&data, 3, DEFAULT_BINS)?;
                println!("| {} | {subset} | {merit:.3} | {ranked} |", release.key());
            }
            Err(e) => println!("| {} | {e} | | |", release.key()),
        }
    }
    Ok(())
}
