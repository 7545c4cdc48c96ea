//! End-to-end run from a TOML config: selection, Top-k, minimization,
//! the experiment grid, then the report.
//!
//! `cargo run --release --example full_pipeline -- [out-dir]`

use std::error::Error;
use std::path::PathBuf;

use defectkit::config::RunConfig;
use defectkit::pipeline::{cmd_report, cmd_run};
use defectkit::surrogate::{synthetic_corpus, write_corpus};

const CONFIG: &str = r#"
manifest = "data/manifest.toml"
out = "results"
seed = 1

[[scenario]]
kind = "wpdp_nearest"
[[scenario]]
kind = "cpdp_exhaustive"
cpdp_max_releases = 2

[[classifier]]
kind = "naive_bayes"
[[classifier]]
kind = "tree"
min_leaf = 4

[[metric_set]]
name = "ALL"
rule = "all"
[[metric_set]]
name = "FILTER"
rule = "filter"
[[metric_set]]
name = "TOP5"
rule = "top_k"
k = 5
[[metric_set]]
name = "MIN"
rule = "minimum"
k = 5
phi = 0.6

[comparison]
baseline = "ALL"
alpha = 0.01
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let root = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("defectkit-example"), PathBuf::from);
    let layout: Vec<(String, String, usize, usize)> = [("alpha", 3), ("beta", 3), ("gamma", 2)]
        .iter()
        .flat_map(|&(p, n)| (0..n).map(move |v| (p.to_string(), format!("{}.0", v + 1), 150 + 25 * v, 35 + 6 * v)))
        .collect();
    write_corpus(&synthetic_corpus(&layout, 5), &root.join("data"))?;
    let config_path = root.join("run.toml");
    std::fs::write(&config_path, CONFIG)?;

    let config = RunConfig::load(&config_path)?;
    let outcome = cmd_run(&config)?;
    println!("{} rows, {} failed cells, results sha256 {}\n", outcome.rows, outcome.failed_cells, outcome.results_digest);
    let report = cmd_report(&outcome.out)?;
    print!("{}", report.markdown);
    println!("\nartifacts in {}", outcome.out.display());
    Ok(())
}
