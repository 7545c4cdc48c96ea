use super::*;
use crate::scenarios::ResultRow;
use crate::stats::Outcome;
use crate::surrogate::{synthetic_corpus, write_corpus};
use crate::learners::ClassifierKind;

fn layout(projects: &[(&str, usize)]) -> Vec<(String, String, usize, usize)> {
    let mut out = Vec::new();
    for (p, releases) in projects {
        for v in 0..*releases {
            out.push((p.to_string(), format!("1.{v}"), 60 + 10 * v, 18 + 3 * v));
        }
    }
    out
}

/// Writes a corpus and a config into a temp dir; returns (dir, config path).
fn setup(projects: &[(&str, usize)], body: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&synthetic_corpus(&layout(projects), 5), &dir.path().join("data")).unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, format!("manifest = \"data/manifest.toml\"\nout = \"out\"\n{body}")).unwrap();
    (dir, config)
}

const FULL: &str = r#"
[[scenario]]
kind = "wpdp_nearest"
[[scenario]]
kind = "wpdp_all_history"
[[scenario]]
kind = "cpdp_exhaustive"
cpdp_max_releases = 2

[[classifier]]
kind = "naive_bayes"
[[classifier]]
kind = "linear_svm"
epochs = 20

[[metric_set]]
name = "ALL"
rule = "all"
[[metric_set]]
name = "FILTER"
rule = "filter"
[[metric_set]]
name = "TOP3"
rule = "top_k"
k = 3
[[metric_set]]
name = "MIN"
rule = "minimum"
k = 4
"#;

fn read_dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn minimal_config_emits_one_row() {
    let (_dir, path) = setup(
        &[("solo", 2)],
        "[[scenario]]\nkind = \"wpdp_nearest\"\n[[classifier]]\nkind = \"naive_bayes\"\n[[metric_set]]\nname = \"ALL\"\nrule = \"all\"\n",
    );
    let config = RunConfig::load(&path).unwrap();
    let outcome = cmd_run(&config).unwrap();
    assert_eq!(outcome.rows, 1);
    let text = std::fs::read_to_string(config.out.join(RESULTS_FILE)).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(config.out.join(REPORT_FILE).is_file());
}

#[test]
fn full_grid_row_count_and_byte_identical_reruns() {
    let (dir, path) = setup(&[("a", 3), ("b", 2), ("c", 2)], FULL);
    let mut config = RunConfig::load(&path).unwrap();
    let first = cmd_run(&config).unwrap();
    // 4 targets with history, 3 scenarios, 2 classifiers, 4 metric sets
    assert_eq!(first.rows, 4 * 3 * 2 * 4);
    config.out = dir.path().join("again");
    config.workers = 3;
    let second = cmd_run(&config).unwrap();
    assert_eq!(first.results_digest, second.results_digest);
    let mut a = read_dir_files(&first.out);
    let mut b = read_dir_files(&second.out);
    let ma: serde_json::Value = serde_json::from_slice(&a.remove(MANIFEST_FILE).unwrap()).unwrap();
    let mb: serde_json::Value = serde_json::from_slice(&b.remove(MANIFEST_FILE).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    for name in ["topk.json", "coverage_curve.csv", "minimize_MIN.json", "combinations_MIN.csv", "filter_subsets.csv", "boxplots.csv", "comparisons.json", "thresholds.json"] {
        assert!(a.contains_key(name), "{name}");
    }
}

#[test]
fn report_rerun_reproduces_run_output() {
    let (_dir, path) = setup(&[("a", 3), ("b", 2)], FULL);
    let config = RunConfig::load(&path).unwrap();
    cmd_run(&config).unwrap();
    let before = read_dir_files(&config.out);
    cmd_report(&config.out).unwrap();
    assert_eq!(before, read_dir_files(&config.out));
}

#[test]
fn self_comparison_has_unit_ratios() {
    let body = r#"
[[scenario]]
kind = "wpdp_all_history"
[[classifier]]
kind = "naive_bayes"
[[classifier]]
kind = "tree"
[[metric_set]]
name = "ALL"
rule = "all"
[[metric_set]]
name = "SAME"
rule = "all"
"#;
    let (_dir, path) = setup(&[("a", 4), ("b", 4)], body);
    let report = cmd_run(&RunConfig::load(&path).map(|c| c).unwrap()).map(|o| cmd_report(&o.out).unwrap()).unwrap();
    assert_eq!(report.comparisons.len(), 2);
    for c in &report.comparisons {
        let r = c.report.as_ref().unwrap();
        for m in &r.measures {
            assert_eq!(m.ratio, Some(1.0));
            assert_eq!(m.wilcoxon, WilcoxonCell::NoDifference);
            assert_eq!(m.cliffs_d, 0.0);
            assert!(m.acceptable);
        }
    }
    assert!(report.markdown.contains("| 1.000 |"));
}

fn handmade_row(target: &str, set: &str, o: Outcome) -> ResultRow {
    ResultRow {
        target: target.into(),
        scenario: ScenarioKind::WpdpNearest,
        classifier: ClassifierKind::NaiveBayes,
        metric_set: set.into(),
        subset: Some(FeatureSubset::all()),
        training: vec![],
        outcome: Some(o),
        measures: Some(crate::stats::measures(&o)),
        consistency: None,
        zero_denominator: false,
        cpdp: None,
        error: None,
    }
}

fn handmade_dir(rows: Vec<ResultRow>) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_file(&dir.path().join(RESULTS_FILE), &ResultTable { rows }.to_jsonl()).unwrap();
    let settings = ReportSettings {
        baseline: "ALL".into(),
        alpha: 0.01,
        thresholds: Thresholds::default(),
        metric_sets: vec![ResolvedSet {
            name: "ALL".into(),
            rule: MetricSetRule::All,
            detail: String::new(),
        }],
        scenarios: vec![ScenarioKind::WpdpNearest],
        classifiers: vec!["naive_bayes".into()],
        preprocessing: PREPROCESSING.into(),
    };
    write_file(&dir.path().join(SETTINGS_FILE), &to_json(&settings)).unwrap();
    dir
}

#[test]
fn boxplot_file_for_five_values() {
    // precision tp/(tp+fp) = 0.1 .. 0.5
    let rows: Vec<ResultRow> = (1..=5)
        .map(|i| handmade_row(&format!("t-{i}"), "ALL", Outcome::new(i, 10 - i, 5, 5)))
        .collect();
    let dir = handmade_dir(rows);
    let report = cmd_report(dir.path()).unwrap();
    let b = report
        .boxplots
        .iter()
        .find(|b| b.measure == Measure::Precision)
        .unwrap();
    let s = &b.summary;
    assert_eq!(b.n, 5);
    assert_eq!([s.min, s.q1, s.median, s.q3, s.max], [0.1, 0.2, 0.3, 0.4, 0.5]);
    let csv = std::fs::read_to_string(dir.path().join("boxplots.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("WPDP-1,naive_bayes,ALL,Precision,5,0.1,0.2,0.3,0.4,0.5,")), "{csv}");
}

#[test]
fn threshold_summary_matches_a_recount() {
    let outcomes = [(9, 1, 5, 2), (3, 3, 5, 5), (8, 4, 5, 1), (1, 0, 5, 9), (6, 2, 5, 2), (0, 0, 9, 4)];
    let rows: Vec<ResultRow> = outcomes
        .iter()
        .enumerate()
        .map(|(i, &(tp, fp, tn, fn_))| handmade_row(&format!("t-{i}"), "ALL", Outcome::new(tp, fp, tn, fn_)))
        .collect();
    let triples: Vec<MeasureTriple> = rows.iter().map(|r| r.measures.unwrap()).collect();
    let dir = handmade_dir(rows);
    let report = cmd_report(dir.path()).unwrap();
    let want = threshold_counts(&triples, &Thresholds::default());
    assert_eq!(report.thresholds[0].counts, want);
    let t = Thresholds::default();
    let by_hand = triples.iter().filter(|m| m.precision > t.precision && m.recall > t.recall).count();
    assert_eq!(want.total, by_hand);
    let stored: Vec<ThresholdRow> = from_json(&dir.path().join("thresholds.json")).unwrap();
    assert_eq!(stored, report.thresholds);
}

#[test]
fn report_on_empty_dir_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    match cmd_report(dir.path()) {
        Err(PipelineError::MissingArtifacts { files, .. }) => {
            assert_eq!(files, vec![RESULTS_FILE.to_string(), SETTINGS_FILE.to_string()])
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_metric_name_fails_before_running() {
    let (_dir, path) = setup(
        &[("solo", 2)],
        "[[scenario]]\nkind = \"wpdp_nearest\"\n[[classifier]]\nkind = \"naive_bayes\"\n[[metric_set]]\nname = \"ALL\"\nrule = \"explicit\"\nmetrics = [\"CBO\", \"KLOC\"]\n",
    );
    let e = RunConfig::load(&path).unwrap_err().to_string();
    assert!(e.contains("metric_set[0].metrics") && e.contains("KLOC"), "{e}");
}

#[test]
fn load_corpus_accepts_manifest_or_config() {
    let (dir, path) = setup(&[("a", 2), ("b", 1)], FULL);
    let (from_config, config) = load_corpus(&path, false).unwrap();
    assert!(config.is_some());
    let (from_manifest, none) = load_corpus(&dir.path().join("data/manifest.toml"), false).unwrap();
    assert!(none.is_none());
    assert_eq!(from_config, from_manifest);
    assert_eq!(corpus_summary(&from_config).unwrap().len(), 3);
}

#[test]
fn topk_and_minimize_reports_are_consistent() {
    let corpus = synthetic_corpus(&layout(&[("a", 3), ("b", 3)]), 9).preprocess().unwrap();
    let filters = select_filters(&corpus, 10);
    let subsets = population(&corpus, &filters, CoveragePopulation::All, &[]);
    assert_eq!(subsets.len(), 6);
    let topk = topk_report(&subsets, 10, Some(4)).unwrap();
    assert_eq!(topk.subset, topk.curve.points[3].subset);
    assert_eq!(topk.coverage, topk.curve.points[3].coverage);
    let m = minimize_report(&corpus, topk.subset, &ScenarioSpec::new(ScenarioKind::WpdpNearest), 0.6, false, &subsets).unwrap();
    assert_eq!(m.combinations, 14);
    assert_eq!(m.minimum, m.ranking[0].subset);
    for c in &m.ranking {
        assert!(m.strong_pairs.iter().all(|&(a, b)| !(c.subset.contains(a) && c.subset.contains(b))));
    }
    assert!(minimize_markdown(&m).contains("Minimum subset"));
    assert!(topk_markdown(&topk).contains("Top-4"));
}
