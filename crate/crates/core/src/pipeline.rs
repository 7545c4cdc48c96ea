//! End-to-end commands behind the `defectkit` binary.
//!
//! `run` writes machine-readable artifacts to an output directory and then
//! renders the report from them. Everything except `run_manifest.json` is a
//! pure function of the config and the corpus, so two runs produce
//! byte-identical files. `report` can be re-run on an existing directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{explicit_subset, ConfigError, CoveragePopulation, KChoice, MetricSetDef, RunConfig};
use crate::corpus::{corpus_summary, Corpus, CorpusError, Manifest, MetricId, ParseOptions, SummaryRow};
use crate::features::{greedy_stepwise_cfs, FeatureSubset, LabeledData};
use crate::scenarios::{build_tasks, run_grid, GridSpec, MetricSet, MetricSetRule, ResultTable, ScenarioError, ScenarioKind, ScenarioSpec};
use crate::simplify::{
    choose_k, correlation_matrix, enumerate_admissible, minimum_subset, strong_pairs, tally_occurrences, top_k,
    CoverageCurve, OccurrenceTally, RankedCombination, ScenarioCorrelation, SimplifyError,
};
use crate::stats::{
    boxplot, compare_methods, threshold_counts, BoxplotSummary, ComparisonReport, Measure, MeasureTriple, PairedRow,
    StatsError, ThresholdCounts, Thresholds, WilcoxonCell,
};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const SETTINGS_FILE: &str = "report_settings.json";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const REPORT_FILE: &str = "report.md";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Simplify(#[from] SimplifyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("missing artifacts in {dir}: {}", files.join(", "))]
    MissingArtifacts { dir: PathBuf, files: Vec<String> },
    #[error("metric set `{name}`: {message}")]
    MetricSet { name: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_str(&read_file(path)?).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// A manifest path, or a run config whose `manifest` names one.
pub fn load_corpus(path: &Path, lenient: bool) -> Result<(Corpus, Option<RunConfig>), PipelineError> {
    let text = read_file(path)?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let (manifest, config) = if table.contains_key("manifest") {
        let config = RunConfig::load(path)?;
        (config.manifest.clone(), Some(config))
    } else {
        Manifest::parse(&text)?;
        (path.to_path_buf(), None)
    };
    let lenient = lenient || config.as_ref().is_some_and(|c| c.lenient);
    let corpus = Corpus::load(&manifest, ParseOptions { lenient })?.preprocess()?;
    Ok((corpus, config))
}

/// Corpus summary as a markdown table.
pub fn summary_markdown(rows: &[SummaryRow]) -> String {
    let mut out = String::from("| Project | Version | Instances | Defective | % Defective |\n|---|---|---:|---:|---:|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.1} |",
            r.project, r.version, r.instances, r.defective, r.percent_defective
        );
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    csv_string(
        &["project", "version", "instances", "defective", "percent_defective"],
        rows.iter().map(|r| {
            vec![
                r.project.clone(),
                r.version.clone(),
                r.instances.to_string(),
                r.defective.to_string(),
                format!("{:.1}", r.percent_defective),
            ]
        }),
    )
}

/// The FILTER subset of one release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseFilter {
    pub release: String,
    pub subset: Option<FeatureSubset>,
    pub error: Option<String>,
}

/// Greedy CFS on every release.
pub fn select_filters(corpus: &Corpus, bins: usize) -> Vec<ReleaseFilter> {
    corpus
        .releases
        .iter()
        .map(|r| {
            let result = LabeledData::from_releases([r])
                .map_err(|e| e.to_string())
                .and_then(|d| greedy_stepwise_cfs(&d, bins).map_err(|e| e.to_string()));
            ReleaseFilter {
                release: r.key(),
                subset: result.as_ref().ok().copied(),
                error: result.err(),
            }
        })
        .collect()
}

pub fn filters_csv(filters: &[ReleaseFilter]) -> String {
    csv_string(
        &["release", "subset", "size", "error"],
        filters.iter().map(|f| {
            vec![
                f.release.clone(),
                f.subset.map(|s| s.label()).unwrap_or_default(),
                f.subset.map(|s| s.len().to_string()).unwrap_or_default(),
                f.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

/// Releases whose FILTER subsets feed the tally.
pub fn population(corpus: &Corpus, filters: &[ReleaseFilter], which: CoveragePopulation, scenarios: &[ScenarioSpec]) -> Vec<FeatureSubset> {
    let mut keep = vec![which == CoveragePopulation::All; corpus.len()];
    if which == CoveragePopulation::Training {
        for spec in scenarios {
            for task in build_tasks(corpus, spec) {
                for i in task.training {
                    keep[i] = true;
                }
            }
        }
    }
    filters
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .filter_map(|(f, _)| f.subset)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopkReport {
    pub tally: OccurrenceTally,
    pub ranking: Vec<(MetricId, usize)>,
    pub curve: CoverageCurve,
    pub k: usize,
    pub subset: FeatureSubset,
    pub coverage: f64,
}

/// Tally plus coverage curve; `k = None` takes the curve's peak.
pub fn topk_report(filter_subsets: &[FeatureSubset], k_max: usize, k: Option<usize>) -> Result<TopkReport, PipelineError> {
    let tally = tally_occurrences(filter_subsets)?;
    let curve = choose_k(filter_subsets, k_max)?;
    let k = k.unwrap_or(curve.best_k);
    let subset = top_k(&tally, k)?;
    let coverage = crate::simplify::coverage(filter_subsets, subset)?;
    Ok(TopkReport {
        ranking: tally.ranking(),
        tally,
        curve,
        k,
        subset,
        coverage,
    })
}

pub fn topk_markdown(r: &TopkReport) -> String {
    let mut out = format!("Occurrences over {} filter subsets\n\n| Metric | Count |\n|---|---:|\n", r.tally.n_datasets);
    for (m, c) in &r.ranking {
        let _ = writeln!(out, "| {m} | {c} |");
    }
    out.push_str("\n| k | Top-k | Coverage |\n|---:|---|---:|\n");
    for p in &r.curve.points {
        let mark = if p.k == r.curve.best_k { " (peak)" } else { "" };
        let _ = writeln!(out, "| {} | {} | {:.3}{mark} |", p.k, p.subset, p.coverage);
    }
    let _ = writeln!(out, "\nTop-{}: {} (coverage {:.3})", r.k, r.subset, r.coverage);
    out
}

pub fn coverage_csv(curve: &CoverageCurve) -> String {
    csv_string(
        &["k", "subset", "coverage"],
        curve
            .points
            .iter()
            .map(|p| vec![p.k.to_string(), p.subset.label(), format!("{:?}", p.coverage)]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub universe: FeatureSubset,
    pub scenario: ScenarioKind,
    pub phi: f64,
    pub absolute: bool,
    pub correlation: ScenarioCorrelation,
    pub strong_pairs: Vec<(MetricId, MetricId)>,
    pub combinations: usize,
    pub ranking: Vec<RankedCombination>,
    pub minimum: FeatureSubset,
}

/// Correlation matrix over the universe, strong pairs, and the admissible
/// combinations ranked by coverage.
pub fn minimize_report(
    corpus: &Corpus,
    universe: FeatureSubset,
    scenario: &ScenarioSpec,
    phi: f64,
    absolute: bool,
    filter_subsets: &[FeatureSubset],
) -> Result<MinimizeReport, PipelineError> {
    let correlation = correlation_matrix(corpus, universe, scenario)?;
    let strong = strong_pairs(&correlation.matrix, phi, absolute)?;
    let admissible = enumerate_admissible(universe, &strong)?;
    let ranking = minimum_subset(&admissible, filter_subsets)?;
    let k = universe.len();
    Ok(MinimizeReport {
        universe,
        scenario: scenario.kind,
        phi,
        absolute,
        strong_pairs: strong,
        combinations: (1usize << k) - 2,
        minimum: ranking[0].subset,
        ranking,
        correlation,
    })
}

pub fn minimize_markdown(r: &MinimizeReport) -> String {
    let metrics = r.universe.to_vec();
    let mut out = format!("Median correlations over {} targets ({})\n\n|   |", r.correlation.targets.len(), r.scenario);
    for m in &metrics {
        let _ = write!(out, " {m} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(metrics.len()));
    out.push('\n');
    for a in &metrics {
        let _ = write!(out, "| {a} |");
        for b in &metrics {
            let _ = write!(out, " {:.3} |", r.correlation.matrix.get(*a, *b).unwrap_or(f64::NAN));
        }
        out.push('\n');
    }
    let pairs: Vec<String> = r.strong_pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    let _ = writeln!(
        out,
        "\nStrong pairs (r > {}): {}\n\n{} of {} combinations admissible\n\n| Rank | Combination | Coverage |\n|---:|---|---:|",
        r.phi,
        if pairs.is_empty() { "none".to_string() } else { pairs.join(", ") },
        r.ranking.len(),
        r.combinations
    );
    for (i, c) in r.ranking.iter().enumerate() {
        let _ = writeln!(out, "| {} | {} | {:.3} |", i + 1, c.subset, c.coverage);
    }
    let _ = writeln!(out, "\nMinimum subset: {}", r.minimum);
    out
}

pub fn ranking_csv(ranking: &[RankedCombination]) -> String {
    csv_string(
        &["rank", "subset", "size", "coverage"],
        ranking.iter().enumerate().map(|(i, c)| {
            vec![(i + 1).to_string(), c.subset.label(), c.subset.len().to_string(), format!("{:?}", c.coverage)]
        }),
    )
}

/// What each configured metric set resolved to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSet {
    pub name: String,
    pub rule: MetricSetRule,
    pub detail: String,
}

/// Settings `report` needs, saved by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub baseline: String,
    pub alpha: f64,
    pub thresholds: Thresholds,
    pub metric_sets: Vec<ResolvedSet>,
    pub scenarios: Vec<ScenarioKind>,
    pub classifiers: Vec<String>,
    pub preprocessing: String,
}

/// Per-release filters, the Top-k report and minimize reports needed by a config.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub filters: Vec<ReleaseFilter>,
    pub topk: Option<TopkReport>,
    pub minimize: BTreeMap<String, MinimizeReport>,
}

/// Turns named metric-set definitions into grid rules.
pub fn resolve_metric_sets(corpus: &Corpus, config: &RunConfig) -> Result<(Vec<ResolvedSet>, Selection), PipelineError> {
    let sel = &config.selection;
    let mut selection = Selection::default();
    let mut subsets = Vec::new();
    if config.needs_selection() {
        selection.filters = select_filters(corpus, sel.bins);
        subsets = population(corpus, &selection.filters, sel.coverage_population, &config.scenarios);
        selection.topk = Some(topk_report(&subsets, sel.k_max, None)?);
    }
    let fixed_k = |k: KChoice, curve: &CoverageCurve| match k {
        KChoice::Fixed(k) => k,
        KChoice::Auto(_) => curve.best_k,
    };
    let mut out = Vec::new();
    for set in &config.metric_sets {
        let err = |message: String| PipelineError::MetricSet {
            name: set.name.clone(),
            message,
        };
        let (rule, detail) = match &set.def {
            MetricSetDef::All => (MetricSetRule::All, "all 20 metrics".to_string()),
            MetricSetDef::Filter => (MetricSetRule::Filter, "greedy CFS on each training set".to_string()),
            MetricSetDef::Explicit { metrics } => {
                let s = explicit_subset(metrics).map_err(err)?;
                (MetricSetRule::Fixed(s), "explicit".to_string())
            }
            MetricSetDef::TopK { k } => {
                let topk = selection.topk.as_ref().expect("selection ran");
                let k = fixed_k(*k, &topk.curve);
                let s = top_k(&topk.tally, k)?;
                (MetricSetRule::Fixed(s), format!("Top-{k} by occurrence"))
            }
            MetricSetDef::Minimum { k, phi } => {
                let topk = selection.topk.as_ref().expect("selection ran");
                let k = fixed_k(*k, &topk.curve).max(2);
                let universe = top_k(&topk.tally, k)?;
                let report = minimize_report(corpus, universe, &config.scenarios[0], *phi, sel.absolute_correlation, &subsets)
                    .map_err(|e| err(e.to_string()))?;
                let s = report.minimum;
                let detail = format!("minimum of Top-{k} at phi {phi} ({} matrix)", report.scenario);
                selection.minimize.insert(set.name.clone(), report);
                (MetricSetRule::Fixed(s), detail)
            }
        };
        out.push(ResolvedSet {
            name: set.name.clone(),
            rule,
            detail,
        });
    }
    Ok((out, selection))
}

/// What `run` produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub rows: usize,
    pub failed_cells: usize,
    pub results_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunManifest {
    toolkit: String,
    version: String,
    config_sha256: String,
    seed: u64,
    workers: usize,
    releases: usize,
    rows: usize,
    failed_cells: usize,
    timestamp_unix: u64,
    artifacts: BTreeMap<String, String>,
}

const PREPROCESSING: &str = "ln(v+1) log-filter applied to every metric before selection, correlation and training";

/// Loads the corpus, resolves metric sets, runs the grid and writes all
/// artifacts plus the report into `config.out`.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let corpus = Corpus::load(&config.manifest, ParseOptions { lenient: config.lenient })?.preprocess()?;
    run_on_corpus(config, &corpus)
}

/// [`cmd_run`] on an already preprocessed corpus.
pub fn run_on_corpus(config: &RunConfig, corpus: &Corpus) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let out = &config.out;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    write_file(&out.join("corpus_summary.csv"), &summary_csv(&corpus_summary(corpus)?))?;

    let (resolved, selection) = resolve_metric_sets(corpus, config)?;
    if let Some(topk) = &selection.topk {
        write_file(&out.join("filter_subsets.csv"), &filters_csv(&selection.filters))?;
        write_file(&out.join("topk.json"), &to_json(topk))?;
        write_file(&out.join("coverage_curve.csv"), &coverage_csv(&topk.curve))?;
    }
    for (name, report) in &selection.minimize {
        write_file(&out.join(format!("minimize_{name}.json")), &to_json(report))?;
        write_file(&out.join(format!("combinations_{name}.csv")), &ranking_csv(&report.ranking))?;
    }

    let mut grid = GridSpec::new(
        config.scenarios.clone(),
        config.classifier_specs(),
        resolved.iter().map(|r| MetricSet::new(&r.name, r.rule)).collect(),
    );
    grid.bins = config.selection.bins;
    grid.workers = config.workers;
    let table = run_grid(corpus, &grid)?;
    write_file(&out.join(RESULTS_FILE), &table.to_jsonl())?;
    write_file(&out.join("results.csv"), &table.to_csv())?;

    let settings = ReportSettings {
        baseline: config.comparison.baseline.clone(),
        alpha: config.comparison.alpha,
        thresholds: config.thresholds,
        metric_sets: resolved,
        scenarios: config.scenarios.iter().map(|s| s.kind).collect(),
        classifiers: config.classifiers.iter().map(|c| c.kind().name().to_string()).collect(),
        preprocessing: PREPROCESSING.to_string(),
    };
    write_file(&out.join(SETTINGS_FILE), &to_json(&settings))?;
    cmd_report(out)?;

    let failed_cells = table.rows.iter().filter(|r| r.error.is_some()).count();
    let manifest = RunManifest {
        toolkit: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: hex::encode(Sha256::digest(serde_json::to_string(config).expect("config serializes").as_bytes())),
        seed: config.seed,
        workers: config.workers,
        releases: corpus.len(),
        rows: table.rows.len(),
        failed_cells,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        artifacts: artifact_digests(out)?,
    };
    write_file(&out.join(MANIFEST_FILE), &to_json(&manifest))?;
    Ok(RunOutcome {
        out: out.clone(),
        rows: table.rows.len(),
        failed_cells,
        results_digest: table.digest(),
    })
}

/// SHA-256 of every artifact except the run manifest, by file name.
pub fn artifact_digests(dir: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST_FILE || !entry.path().is_file() {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(io_err(&entry.path()))?;
        out.insert(name, hex::encode(Sha256::digest(&bytes)));
    }
    Ok(out)
}

/// Comparison of one metric set against the baseline within one
/// (scenario, classifier) slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceComparison {
    pub scenario: ScenarioKind,
    pub classifier: String,
    pub metric_set: String,
    /// Targets dropped because either side failed.
    pub dropped: Vec<String>,
    pub report: Option<ComparisonReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub scenario: ScenarioKind,
    pub classifier: String,
    pub metric_set: String,
    pub measure: Measure,
    pub n: usize,
    pub summary: BoxplotSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub scenario: ScenarioKind,
    pub metric_set: String,
    pub counts: ThresholdCounts,
}

/// Everything the report renders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub comparisons: Vec<SliceComparison>,
    pub boxplots: Vec<BoxplotRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub markdown: String,
}

fn measured(table: &ResultTable, scenario: ScenarioKind, classifier: &str, set: &str) -> BTreeMap<String, MeasureTriple> {
    table
        .rows
        .iter()
        .filter(|r| r.scenario == scenario && r.classifier.name() == classifier && r.metric_set == set)
        .filter_map(|r| r.measures.map(|m| (r.target.clone(), m)))
        .collect()
}

fn compare_slice(
    table: &ResultTable,
    settings: &ReportSettings,
    scenario: ScenarioKind,
    classifier: &str,
    set: &str,
) -> SliceComparison {
    let a = measured(table, scenario, classifier, &settings.baseline);
    let b = measured(table, scenario, classifier, set);
    let mut dropped: Vec<String> = a.keys().filter(|k| !b.contains_key(*k)).cloned().collect();
    dropped.extend(b.keys().filter(|k| !a.contains_key(*k)).cloned());
    dropped.sort();
    let rows = |m: &BTreeMap<String, MeasureTriple>, other: &BTreeMap<String, MeasureTriple>| -> Vec<PairedRow> {
        m.iter()
            .filter(|(k, _)| other.contains_key(*k))
            .map(|(k, v)| PairedRow {
                key: k.clone(),
                measures: *v,
            })
            .collect()
    };
    let result = compare_methods(&settings.baseline, &rows(&a, &b), set, &rows(&b, &a), settings.alpha);
    SliceComparison {
        scenario,
        classifier: classifier.to_string(),
        metric_set: set.to_string(),
        dropped,
        report: result.as_ref().ok().cloned(),
        error: result.err().map(|e| e.to_string()),
    }
}

/// Reads `results.jsonl` and `report_settings.json` from `dir`, computes
/// comparisons, boxplot quantiles and threshold counts, and writes them with
/// `report.md`.
pub fn cmd_report(dir: &Path) -> Result<Report, PipelineError> {
    let missing: Vec<String> = [RESULTS_FILE, SETTINGS_FILE]
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingArtifacts {
            dir: dir.to_path_buf(),
            files: missing,
        });
    }
    let results_path = dir.join(RESULTS_FILE);
    let table = ResultTable::from_jsonl(&read_file(&results_path)?).map_err(|e| PipelineError::Artifact {
        path: results_path.clone(),
        message: e.to_string(),
    })?;
    let settings: ReportSettings = from_json(&dir.join(SETTINGS_FILE))?;
    let topk: Option<TopkReport> = match dir.join("topk.json") {
        p if p.is_file() => Some(from_json(&p)?),
        _ => None,
    };
    let mut minimize: Vec<(String, MinimizeReport)> = Vec::new();
    for set in &settings.metric_sets {
        let p = dir.join(format!("minimize_{}.json", set.name));
        if p.is_file() {
            minimize.push((set.name.clone(), from_json(&p)?));
        }
    }

    let set_names: Vec<&str> = settings.metric_sets.iter().map(|s| s.name.as_str()).collect();
    let mut comparisons = Vec::new();
    let mut boxplots = Vec::new();
    let mut thresholds = Vec::new();
    for &scenario in &settings.scenarios {
        for classifier in &settings.classifiers {
            for set in &set_names {
                if *set != settings.baseline {
                    comparisons.push(compare_slice(&table, &settings, scenario, classifier, set));
                }
                let values: Vec<MeasureTriple> = measured(&table, scenario, classifier, set).into_values().collect();
                for measure in Measure::ALL {
                    let sample: Vec<f64> = values.iter().map(|m| measure.of(m)).collect();
                    if let Ok(summary) = boxplot(&sample) {
                        boxplots.push(BoxplotRow {
                            scenario,
                            classifier: classifier.clone(),
                            metric_set: set.to_string(),
                            measure,
                            n: sample.len(),
                            summary,
                        });
                    }
                }
            }
        }
        for set in &set_names {
            let rows: Vec<MeasureTriple> = table
                .rows
                .iter()
                .filter(|r| r.scenario == scenario && r.metric_set == *set)
                .filter_map(|r| r.measures)
                .collect();
            thresholds.push(ThresholdRow {
                scenario,
                metric_set: set.to_string(),
                counts: threshold_counts(&rows, &settings.thresholds),
            });
        }
    }

    let markdown = render_markdown(&table, &settings, &comparisons, &boxplots, &thresholds, topk.as_ref(), &minimize);
    write_file(&dir.join("comparisons.json"), &to_json(&comparisons))?;
    write_file(&dir.join("thresholds.json"), &to_json(&thresholds))?;
    write_file(&dir.join("boxplots.csv"), &boxplots_csv(&boxplots))?;
    write_file(&dir.join(REPORT_FILE), &markdown)?;
    Ok(Report {
        comparisons,
        boxplots,
        thresholds,
        markdown,
    })
}

fn boxplots_csv(rows: &[BoxplotRow]) -> String {
    csv_string(
        &[
            "scenario", "classifier", "metric_set", "measure", "n", "min", "q1", "median", "q3", "max", "whisker_low",
            "whisker_high", "outliers",
        ],
        rows.iter().map(|r| {
            let s = &r.summary;
            let f = |v: f64| format!("{v:?}");
            vec![
                r.scenario.label().to_string(),
                r.classifier.clone(),
                r.metric_set.clone(),
                r.measure.name().to_string(),
                r.n.to_string(),
                f(s.min),
                f(s.q1),
                f(s.median),
                f(s.q3),
                f(s.max),
                f(s.whisker_low),
                f(s.whisker_high),
                s.outliers.iter().map(|&v| f(v)).collect::<Vec<_>>().join(" "),
            ]
        }),
    )
}

fn fmt3(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn p_cell(w: &WilcoxonCell) -> String {
    match w {
        WilcoxonCell::Tested(r) if r.p < 0.001 => "<0.001".into(),
        WilcoxonCell::Tested(r) => format!("{:.3}", r.p),
        WilcoxonCell::NoDifference => "1.000 (no diff)".into(),
        WilcoxonCell::TooFewPairs { nonzero } => format!("n/a ({nonzero} pairs)"),
    }
}

fn render_markdown(
    table: &ResultTable,
    settings: &ReportSettings,
    comparisons: &[SliceComparison],
    boxplots: &[BoxplotRow],
    thresholds: &[ThresholdRow],
    topk: Option<&TopkReport>,
    minimize: &[(String, MinimizeReport)],
) -> String {
    let mut out = String::from("# Defect prediction report\n\n");
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    let _ = writeln!(out, "{} result rows, {} failed cells. Preprocessing: {}.\n", table.rows.len(), failed, settings.preprocessing);
    out.push_str("## Metric sets\n\n| Name | Subset | Derivation |\n|---|---|---|\n");
    for s in &settings.metric_sets {
        let subset = match s.rule {
            MetricSetRule::All => "all".to_string(),
            MetricSetRule::Filter => "per cell".to_string(),
            MetricSetRule::Fixed(f) => f.label(),
        };
        let _ = writeln!(out, "| {} | {} | {} |", s.name, subset, s.detail);
    }
    if let Some(t) = topk {
        out.push_str("\n## Top-k selection\n\n");
        out.push_str(&topk_markdown(t));
    }
    for (name, m) in minimize {
        let _ = writeln!(out, "\n## Minimization for {name}\n");
        out.push_str(&minimize_markdown(m));
    }
    if settings.scenarios.contains(&ScenarioKind::CpdpExhaustive) {
        out.push_str("\nCPDP rows pick the training union by its score on the target itself, so they are optimistic upper bounds.\n");
    }
    for &scenario in &settings.scenarios {
        let _ = writeln!(out, "\n## {scenario}\n");
        out.push_str("### Medians\n\n| Classifier | Metric set | n | Precision | Recall | F-measure |\n|---|---|---:|---:|---:|---:|\n");
        for classifier in &settings.classifiers {
            for s in &settings.metric_sets {
                let find = |m: Measure| {
                    boxplots.iter().find(|b| {
                        b.scenario == scenario && &b.classifier == classifier && b.metric_set == s.name && b.measure == m
                    })
                };
                let n = find(Measure::Precision).map_or(0, |b| b.n);
                let cells: Vec<String> = Measure::ALL.iter().map(|&m| fmt3(find(m).map(|b| b.summary.median))).collect();
                let _ = writeln!(out, "| {classifier} | {} | {n} | {} |", s.name, cells.join(" | "));
            }
        }
        for s in settings.metric_sets.iter().filter(|s| s.name != settings.baseline) {
            let _ = writeln!(
                out,
                "\n### {} vs {}\n\n| Classifier | Measure | Median {} | Median {} | Ratio | p | Cliff's d | Acceptable |\n|---|---|---:|---:|---:|---:|---:|---|",
                s.name, settings.baseline, settings.baseline, s.name
            );
            for c in comparisons.iter().filter(|c| c.scenario == scenario && c.metric_set == s.name) {
                match &c.report {
                    Some(r) => {
                        for m in &r.measures {
                            let _ = writeln!(
                                out,
                                "| {} | {} | {:.3} | {:.3} | {} | {} | {:.3} | {} |",
                                c.classifier,
                                m.measure.name(),
                                m.median_a,
                                m.median_b,
                                fmt3(m.ratio),
                                p_cell(&m.wilcoxon),
                                m.cliffs_d,
                                if m.acceptable { "yes" } else { "no" }
                            );
                        }
                    }
                    None => {
                        let _ = writeln!(out, "| {} | - | - | - | - | - | - | {} |", c.classifier, c.error.as_deref().unwrap_or("-"));
                    }
                }
                if !c.dropped.is_empty() {
                    let _ = writeln!(out, "| {} | dropped | {} | | | | | |", c.classifier, c.dropped.join(" "));
                }
            }
        }
        let _ = writeln!(
            out,
            "\n### Threshold counts (precision > {}, recall > {}, F > {})\n\n| Metric set | Rows | Precision | Recall | F-measure | Both P and R |\n|---|---:|---:|---:|---:|---:|",
            settings.thresholds.precision, settings.thresholds.recall, settings.thresholds.f_measure
        );
        for t in thresholds.iter().filter(|t| t.scenario == scenario) {
            let c = &t.counts;
            let _ = writeln!(out, "| {} | {} | {} | {} | {} | {} |", t.metric_set, c.rows, c.precision, c.recall, c.f_measure, c.total);
        }
    }
    out
}

#[cfg(test)]
mod tests;
