use super::*;
use crate::corpus::{Instance, Preprocessing, METRIC_COUNT};
use crate::learners::{Hyperparameters, TreeParams};
use crate::surrogate::{promise_shaped_corpus, synthetic_corpus};

fn layout(spec: &[(&str, &str, usize, usize)]) -> Vec<(String, String, usize, usize)> {
    spec.iter().map(|&(p, v, n, d)| (p.into(), v.into(), n, d)).collect()
}

fn small_corpus() -> Corpus {
    synthetic_corpus(
        &layout(&[
            ("a", "1", 40, 10),
            ("a", "2", 50, 15),
            ("b", "1", 30, 8),
            ("b", "2", 45, 20),
            ("b", "3", 35, 9),
            ("c", "1", 38, 12),
        ]),
        5,
    )
    .preprocess()
    .unwrap()
}

#[test]
fn promise_layout_gives_24_targets() {
    let corpus = promise_shaped_corpus(1).preprocess().unwrap();
    let nearest = build_tasks(&corpus, &ScenarioSpec::new(ScenarioKind::WpdpNearest));
    assert_eq!(nearest.len(), 24);
    let ant17 = corpus.find("ant", "1.7").unwrap();
    let task = nearest.iter().find(|t| t.target == ant17).unwrap();
    assert_eq!(keys(&corpus, &task.training), vec!["ant-1.6"]);
    let history = build_tasks(&corpus, &ScenarioSpec::new(ScenarioKind::WpdpAllHistory));
    let task = history.iter().find(|t| t.target == ant17).unwrap();
    assert_eq!(keys(&corpus, &task.training), vec!["ant-1.3", "ant-1.4", "ant-1.5", "ant-1.6"]);
    let cpdp = build_tasks(&corpus, &ScenarioSpec::new(ScenarioKind::CpdpExhaustive));
    assert_eq!(cpdp.len(), 24);
    for (n, h, c) in nearest.iter().zip(&history).zip(&cpdp).map(|((a, b), c)| (a, b, c)) {
        assert!(n.training.iter().all(|i| h.training.contains(i)));
        assert!(!h.training.contains(&h.target));
        let project = &corpus.releases[c.target].project;
        assert!(c.training.iter().all(|&i| &corpus.releases[i].project != project));
    }
}

#[test]
fn two_projects_three_tasks() {
    let corpus = synthetic_corpus(
        &layout(&[("x", "1", 20, 5), ("x", "2", 20, 5), ("y", "1", 20, 5), ("y", "2", 20, 5), ("y", "3", 20, 5)]),
        1,
    );
    assert_eq!(build_tasks(&corpus, &ScenarioSpec::new(ScenarioKind::WpdpNearest)).len(), 3);
}

#[test]
fn combination_counts() {
    assert_eq!(combination_count(33, 3), 6017);
    let pool: Vec<usize> = (0..33).collect();
    let combos = combinations(&pool, 3);
    assert_eq!(combos.len(), 6017);
    assert_eq!(combos[0], vec![0]);
    assert_eq!(combos[33], vec![0, 1]);
    assert_eq!(combos.last().unwrap(), &vec![30, 31, 32]);
    assert_eq!(combination_count(34, 3), 34 + 561 + 5984);
}

fn release(project: &str, version: &str, rows: &[(f64, bool)]) -> Release {
    let instances = rows
        .iter()
        .enumerate()
        .map(|(i, &(v, b))| {
            let mut metrics = [0.0; METRIC_COUNT];
            metrics[0] = v;
            metrics[1] = (i % 3) as f64;
            Instance {
                class_name: format!("{project}.C{i}"),
                metrics,
                bug_count: b as u32,
                buggy: Some(b),
            }
        })
        .collect();
    Release {
        project: project.into(),
        version: version.into(),
        instances,
        preprocessing: Preprocessing {
            log_filtered: true,
            binarized: true,
        },
    }
}

fn memorizing_tree() -> ClassifierSpec {
    ClassifierSpec::new(Hyperparameters::Tree(TreeParams { min_leaf: 1, max_depth: 30 }), 0).unwrap()
}

#[test]
fn matching_foreign_release_wins() {
    let target_rows: Vec<(f64, bool)> = (0..30).map(|i| (i as f64, i % 7 < 3)).collect();
    let inverted: Vec<(f64, bool)> = target_rows.iter().map(|&(v, b)| (v, !b)).collect();
    let shifted: Vec<(f64, bool)> = target_rows.iter().map(|&(v, b)| (v + 0.5, (v as usize) % 2 == 0 && !b)).collect();
    let corpus = Corpus::new(vec![
        release("p", "1", &inverted),
        release("p", "2", &target_rows),
        release("q", "1", &inverted),
        release("r", "1", &target_rows),
        release("s", "1", &shifted),
    ])
    .unwrap();
    let spec = ScenarioSpec::new(ScenarioKind::CpdpExhaustive);
    let res = exhaustive_cpdp(&corpus, 1, &spec, &memorizing_tree(), MetricSetRule::All, 10).unwrap();
    assert_eq!(res.training, vec![3]);
    assert_eq!(res.objective_value, 1.0);
    assert_eq!(res.combinations_evaluated, 7);
    // brute force over every union
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for combo in combinations(&[2, 3, 4], 3) {
        let data = labeled(&corpus, &combo).unwrap();
        let model = train(&memorizing_tree(), &data, FeatureSubset::all()).unwrap();
        let f = measures(&model.evaluate_data(&labeled(&corpus, &[1]).unwrap())).f_measure;
        if best.as_ref().is_none_or(|b| f > b.0 || (f == b.0 && combo.len() < b.1)) {
            best = Some((f, combo.len(), combo));
        }
    }
    assert_eq!(best.unwrap().2, vec![3]);
}

#[test]
fn single_release_search_matches_direct_evaluation() {
    let corpus = small_corpus();
    let mut spec = ScenarioSpec::new(ScenarioKind::CpdpExhaustive);
    spec.cpdp_max_releases = 1;
    let nb = ClassifierSpec::default_for(ClassifierKind::NaiveBayes, 0);
    let target = corpus.find("c", "1").unwrap();
    let trimmed = Corpus::new(vec![
        corpus.releases[0].clone(),
        corpus.releases[2].clone(),
        corpus.releases[target].clone(),
    ])
    .unwrap();
    let res = exhaustive_cpdp(&trimmed, 2, &spec, &nb, MetricSetRule::All, 10).unwrap();
    let f = |i: usize| {
        let m = train(&nb, &labeled(&trimmed, &[i]).unwrap(), FeatureSubset::all()).unwrap();
        measures(&m.evaluate_data(&labeled(&trimmed, &[2]).unwrap())).f_measure
    };
    let want = if f(1) > f(0) { 1 } else { 0 };
    assert_eq!(res.training, vec![want]);
    assert_eq!(res.objective_value, f(want));
}

#[test]
fn chosen_union_reproduces_its_outcome() {
    let corpus = small_corpus();
    let spec = ScenarioSpec::new(ScenarioKind::CpdpExhaustive);
    let lr = ClassifierSpec::default_for(ClassifierKind::Logistic, 0);
    let target = corpus.find("b", "2").unwrap();
    for rule in [MetricSetRule::All, MetricSetRule::Filter] {
        let res = exhaustive_cpdp(&corpus, target, &spec, &lr, rule, 10).unwrap();
        assert_eq!(res.combinations_evaluated, combination_count(3, 3));
        let data = labeled(&corpus, &res.training).unwrap();
        let subset = MetricSet::new("x", rule).resolve(&data, 10).unwrap();
        assert_eq!(subset, res.subset);
        let model = train(&lr, &data, subset).unwrap();
        assert_eq!(model.evaluate_data(&labeled(&corpus, &[target]).unwrap()), res.outcome);
    }
}

fn grid(workers: usize) -> GridSpec {
    let mut g = GridSpec::new(
        ScenarioKind::ALL.iter().map(|&k| ScenarioSpec::new(k)).collect(),
        vec![
            ClassifierSpec::default_for(ClassifierKind::NaiveBayes, 3),
            ClassifierSpec::default_for(ClassifierKind::LinearSvm, 3),
        ],
        vec![
            MetricSet::new("ALL", MetricSetRule::All),
            MetricSet::new("FILTER", MetricSetRule::Filter),
            MetricSet::new("CBO+LOC", MetricSetRule::Fixed("CBO+LOC".parse().unwrap())),
        ],
    );
    g.workers = workers;
    g
}

#[test]
fn grid_shape_and_order() {
    let corpus = small_corpus();
    let table = run_grid(&corpus, &grid(1)).unwrap();
    // 3 targets × 3 scenarios × 2 classifiers × 3 metric sets
    assert_eq!(table.rows.len(), 54);
    assert!(table.rows.iter().all(|r| r.error.is_none()));
    let first: Vec<(&str, ScenarioKind, ClassifierKind, &str)> = table.rows[..7]
        .iter()
        .map(|r| (r.target.as_str(), r.scenario, r.classifier, r.metric_set.as_str()))
        .collect();
    assert_eq!(first[0], ("a-2", ScenarioKind::WpdpNearest, ClassifierKind::NaiveBayes, "ALL"));
    assert_eq!(first[2], ("a-2", ScenarioKind::WpdpNearest, ClassifierKind::NaiveBayes, "CBO+LOC"));
    assert_eq!(first[3], ("a-2", ScenarioKind::WpdpNearest, ClassifierKind::LinearSvm, "ALL"));
    assert_eq!(first[6], ("a-2", ScenarioKind::WpdpAllHistory, ClassifierKind::NaiveBayes, "ALL"));
    for r in &table.rows {
        assert!(!r.training.contains(&r.target));
        match r.metric_set.as_str() {
            "ALL" => assert_eq!(r.subset, Some(FeatureSubset::all())),
            "CBO+LOC" => assert_eq!(r.subset.unwrap().label(), "CBO+LOC"),
            _ => {}
        }
        assert_eq!(r.cpdp.is_some(), r.scenario == ScenarioKind::CpdpExhaustive);
        if let Some(c) = &r.cpdp {
            assert!(c.target_leak);
            assert!(r.training.len() <= 3);
        }
    }
}

#[test]
fn smallest_grid() {
    let corpus = synthetic_corpus(&layout(&[("a", "1", 30, 8), ("a", "2", 30, 9)]), 2).preprocess().unwrap();
    let g = GridSpec::new(
        vec![ScenarioSpec::new(ScenarioKind::WpdpNearest)],
        vec![ClassifierSpec::default_for(ClassifierKind::NaiveBayes, 0)],
        vec![MetricSet::new("ALL", MetricSetRule::All)],
    );
    let table = run_grid(&corpus, &g).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].training, vec!["a-1"]);
}

#[test]
fn grid_is_independent_of_workers() {
    let corpus = small_corpus();
    let a = run_grid(&corpus, &grid(1)).unwrap();
    let b = run_grid(&corpus, &grid(3)).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    assert_eq!(a.digest(), run_grid(&corpus, &grid(2)).unwrap().digest());
    assert_eq!(ResultTable::from_jsonl(&a.to_jsonl()).unwrap(), a);
}
