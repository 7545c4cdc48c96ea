use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use defectkit::config::{KChoice, MetricSetDef, RunConfig};
use defectkit::corpus::corpus_summary;
use defectkit::pipeline::{
    cmd_report, cmd_run, coverage_csv, filters_csv, load_corpus, minimize_markdown, minimize_report, population,
    ranking_csv, select_filters, summary_csv, summary_markdown, topk_report, PipelineError,
};
use defectkit::scenarios::{ScenarioKind, ScenarioSpec};
use defectkit::simplify::DEFAULT_PHI;

#[derive(Parser)]
#[command(name = "defectkit", version, about = "Metric-set simplification for defect prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run config, or a corpus manifest for the inspection commands.
    #[arg(long)]
    config: PathBuf,
    /// Accept unknown CSV columns.
    #[arg(long)]
    lenient: bool,
    /// Also write machine-readable output here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full grid and write artifacts plus the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lenient: bool,
    },
    /// Re-render the report of an existing run.
    Report {
        /// Result directory of a previous run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Instances and defect rates per release.
    Summary(Common),
    /// FILTER subset of every release.
    Select(Common),
    /// Occurrence tally and coverage curve.
    Topk {
        #[command(flatten)]
        common: Common,
        /// Report Top-k for this k instead of the coverage peak.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Correlation matrix, strong pairs and ranked admissible combinations.
    Minimize {
        #[command(flatten)]
        common: Common,
        /// Size of the Top-k universe (default: coverage peak).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        phi: Option<f64>,
    },
}

fn write_to(dir: &Option<PathBuf>, files: &[(&str, String)]) -> Result<(), String> {
    let Some(dir) = dir else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn selection_inputs(c: &Common) -> Result<(defectkit::corpus::Corpus, Option<RunConfig>), PipelineError> {
    load_corpus(&c.config, c.lenient)
}

fn bins_of(config: &Option<RunConfig>) -> usize {
    config.as_ref().map_or(defectkit::features::DEFAULT_BINS, |c| c.selection.bins)
}

fn k_max_of(config: &Option<RunConfig>) -> usize {
    config.as_ref().map_or(defectkit::simplify::DEFAULT_K_MAX, |c| c.selection.k_max)
}

fn run(cli: Cli) -> Result<(), String> {
    let s = |e: PipelineError| e.to_string();
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
            lenient,
        } => {
            let mut cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
            if let Some(out) = out {
                cfg.out = out;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.lenient |= lenient;
            cfg.validate().map_err(|e| e.to_string())?;
            let outcome = cmd_run(&cfg).map_err(s)?;
            println!(
                "{} rows ({} failed cells) written to {}\nresults sha256 {}",
                outcome.rows,
                outcome.failed_cells,
                outcome.out.display(),
                outcome.results_digest
            );
        }
        Command::Report { out } => {
            let report = cmd_report(&out).map_err(s)?;
            print!("{}", report.markdown);
        }
        Command::Summary(c) => {
            let (corpus, _) = selection_inputs(&c).map_err(s)?;
            let rows = corpus_summary(&corpus).map_err(|e| e.to_string())?;
            print!("{}", summary_markdown(&rows));
            write_to(&c.out, &[("corpus_summary.csv", summary_csv(&rows))])?;
        }
        Command::Select(c) => {
            let (corpus, config) = selection_inputs(&c).map_err(s)?;
            let filters = select_filters(&corpus, bins_of(&config));
            println!("| Release | FILTER subset |\n|---|---|");
            for f in &filters {
                let cell = f.subset.map(|s| s.label()).or_else(|| f.error.clone()).unwrap_or_default();
                println!("| {} | {} |", f.release, cell);
            }
            write_to(&c.out, &[("filter_subsets.csv", filters_csv(&filters))])?;
        }
        Command::Topk { common, k } => {
            let (corpus, config) = selection_inputs(&common).map_err(s)?;
            let filters = select_filters(&corpus, bins_of(&config));
            let subsets = population_of(&corpus, &filters, &config);
            let report = topk_report(&subsets, k_max_of(&config), k).map_err(s)?;
            print!("{}", defectkit::pipeline::topk_markdown(&report));
            write_to(
                &common.out,
                &[
                    ("filter_subsets.csv", filters_csv(&filters)),
                    ("coverage_curve.csv", coverage_csv(&report.curve)),
                    ("topk.json", serde_json::to_string_pretty(&report).expect("serializes")),
                ],
            )?;
        }
        Command::Minimize { common, k, phi } => {
            let (corpus, config) = selection_inputs(&common).map_err(s)?;
            let filters = select_filters(&corpus, bins_of(&config));
            let subsets = population_of(&corpus, &filters, &config);
            let (config_k, config_phi) = minimum_defaults(&config);
            let k = k.or(config_k);
            let phi = phi.unwrap_or(config_phi);
            let topk = topk_report(&subsets, k_max_of(&config), k.map(|k| k.max(2))).map_err(s)?;
            let scenario = config
                .as_ref()
                .map_or(ScenarioSpec::new(ScenarioKind::WpdpNearest), |c| c.scenarios[0]);
            let absolute = config.as_ref().is_some_and(|c| c.selection.absolute_correlation);
            let report = minimize_report(&corpus, topk.subset, &scenario, phi, absolute, &subsets).map_err(s)?;
            print!("{}", minimize_markdown(&report));
            write_to(
                &common.out,
                &[
                    ("minimize.json", serde_json::to_string_pretty(&report).expect("serializes")),
                    ("combinations.csv", ranking_csv(&report.ranking)),
                ],
            )?;
        }
    }
    Ok(())
}

fn population_of(
    corpus: &defectkit::corpus::Corpus,
    filters: &[defectkit::pipeline::ReleaseFilter],
    config: &Option<RunConfig>,
) -> Vec<defectkit::features::FeatureSubset> {
    match config {
        Some(c) => population(corpus, filters, c.selection.coverage_population, &c.scenarios),
        None => population(corpus, filters, Default::default(), &[]),
    }
}

/// k and phi of the first `minimum` metric set in the config, if any.
fn minimum_defaults(config: &Option<RunConfig>) -> (Option<usize>, f64) {
    config
        .iter()
        .flat_map(|c| &c.metric_sets)
        .find_map(|s| match s.def {
            MetricSetDef::Minimum { k, phi } => Some((
                match k {
                    KChoice::Fixed(k) => Some(k),
                    KChoice::Auto(_) => None,
                },
                phi,
            )),
            _ => None,
        })
        .unwrap_or((None, DEFAULT_PHI))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
