//! Training/test task construction and the experiment grid.
//!
//! Within-project scenarios train on earlier releases of the target's
//! project. The cross-project scenario searches every union of up to
//! `cpdp_max_releases` foreign releases and keeps, per cell, the union that
//! scores best on the target itself. That choice peeks at the target labels;
//! every CPDP row carries `target_leak = true` to say so.
//!
//! The CPDP search streams over all unions of the corpus once: each union is
//! trained a single time per (metric set, classifier) and evaluated on every
//! target it is foreign to.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, Release};
use crate::features::{greedy_stepwise_cfs, FeatureSubset, LabeledData, DEFAULT_BINS};
use crate::learners::{train, ClassifierKind, ClassifierSpec, Model};
use crate::stats::{consistency, measures, Measure, MeasureTriple, Outcome};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("release {0} has no release from another project to train on")]
    NoForeignReleases(String),
    #[error("cpdp_max_releases must be at least 1")]
    InvalidMaxReleases,
    #[error("every candidate training set was unusable for {0}")]
    NoUsableCombination(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("unknown release {0}")]
    UnknownRelease(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    WpdpNearest,
    WpdpAllHistory,
    CpdpExhaustive,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::WpdpNearest,
        ScenarioKind::WpdpAllHistory,
        ScenarioKind::CpdpExhaustive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::WpdpNearest => "WPDP-1",
            ScenarioKind::WpdpAllHistory => "WPDP-2",
            ScenarioKind::CpdpExhaustive => "CPDP",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn default_max_releases() -> usize {
    3
}

fn default_objective() -> Measure {
    Measure::FMeasure
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(default = "default_max_releases")]
    pub cpdp_max_releases: usize,
    #[serde(default = "default_objective")]
    pub cpdp_objective: Measure,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> ScenarioSpec {
        ScenarioSpec {
            kind,
            cpdp_max_releases: default_max_releases(),
            cpdp_objective: default_objective(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.cpdp_max_releases == 0 {
            return Err(ScenarioError::InvalidMaxReleases);
        }
        Ok(())
    }
}

/// Target and training releases, as indices into the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionTask {
    pub target: usize,
    /// WPDP: earlier releases of the same project. CPDP: the pool of foreign
    /// releases the search draws from.
    pub training: Vec<usize>,
    pub kind: ScenarioKind,
}

/// One task per release that has a predecessor in its project.
pub fn build_tasks(corpus: &Corpus, spec: &ScenarioSpec) -> Vec<PredictionTask> {
    let mut tasks = Vec::new();
    for (t, target) in corpus.releases.iter().enumerate() {
        let history: Vec<usize> = (0..t)
            .filter(|&i| corpus.releases[i].project == target.project)
            .collect();
        if history.is_empty() {
            continue;
        }
        let training = match spec.kind {
            ScenarioKind::WpdpNearest => vec![*history.last().expect("non-empty")],
            ScenarioKind::WpdpAllHistory => history,
            ScenarioKind::CpdpExhaustive => foreign_pool(corpus, t),
        };
        tasks.push(PredictionTask {
            target: t,
            training,
            kind: spec.kind,
        });
    }
    tasks
}

/// Releases of every project other than the target's.
pub fn foreign_pool(corpus: &Corpus, target: usize) -> Vec<usize> {
    let project = &corpus.releases[target].project;
    (0..corpus.len())
        .filter(|&i| &corpus.releases[i].project != project)
        .collect()
}

/// Every union of 1..=`max` items of `pool`, by size, then lexicographically.
pub fn combinations(pool: &[usize], max: usize) -> Vec<Vec<usize>> {
    fn extend(pool: &[usize], from: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in from..pool.len() {
            cur.push(pool[i]);
            extend(pool, i + 1, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=max.min(pool.len()) {
        extend(pool, 0, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// How a metric set picks its features for one training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "subset", rename_all = "snake_case")]
pub enum MetricSetRule {
    All,
    /// Greedy CFS on the training data of the cell.
    Filter,
    Fixed(FeatureSubset),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub name: String,
    pub rule: MetricSetRule,
}

impl MetricSet {
    pub fn new(name: &str, rule: MetricSetRule) -> MetricSet {
        MetricSet {
            name: name.to_string(),
            rule,
        }
    }

    pub fn resolve(&self, training: &LabeledData, bins: usize) -> Result<FeatureSubset, String> {
        match self.rule {
            MetricSetRule::All => Ok(FeatureSubset::all()),
            MetricSetRule::Fixed(s) => Ok(s),
            MetricSetRule::Filter => greedy_stepwise_cfs(training, bins).map_err(|e| e.to_string()),
        }
    }
}

/// Details of the union chosen by the CPDP search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdpChoice {
    pub objective: Measure,
    pub objective_value: f64,
    pub combinations_evaluated: usize,
    pub combinations_skipped: usize,
    /// The union was chosen using the target's own labels.
    pub target_leak: bool,
}

/// One cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub target: String,
    pub scenario: ScenarioKind,
    pub classifier: ClassifierKind,
    pub metric_set: String,
    pub subset: Option<FeatureSubset>,
    pub training: Vec<String>,
    pub outcome: Option<Outcome>,
    pub measures: Option<MeasureTriple>,
    pub consistency: Option<f64>,
    /// Precision or recall had a zero denominator and was set to 0.
    pub zero_denominator: bool,
    pub cpdp: Option<CpdpChoice>,
    pub error: Option<String>,
}

impl ResultRow {
    fn blank(target: &Release, scenario: ScenarioKind, classifier: ClassifierKind, set: &MetricSet) -> ResultRow {
        ResultRow {
            target: target.key(),
            scenario,
            classifier,
            metric_set: set.name.clone(),
            subset: None,
            training: Vec::new(),
            outcome: None,
            measures: None,
            consistency: None,
            zero_denominator: false,
            cpdp: None,
            error: None,
        }
    }

    fn fill(&mut self, subset: FeatureSubset, training: Vec<String>, outcome: Outcome) {
        self.subset = Some(subset);
        self.training = training;
        self.outcome = Some(outcome);
        self.measures = Some(measures(&outcome));
        self.consistency = consistency(&outcome).ok();
        self.zero_denominator = outcome.tp + outcome.fp == 0 || outcome.tp + outcome.fn_ == 0;
    }

    /// `target|scenario|classifier`, the key used to pair metric sets.
    pub fn pair_key(&self) -> String {
        format!("{}|{}|{}", self.target, self.scenario, self.classifier)
    }
}

/// Grid results in canonical row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r).expect("rows serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<ResultTable, serde_json::Error> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(ResultTable { rows })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "target", "scenario", "classifier", "metric_set", "subset", "training", "tp", "fp", "tn", "fn",
            "precision", "recall", "f_measure", "consistency", "zero_denominator", "cpdp_objective",
            "target_leak", "error",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            let o = r.outcome.unwrap_or_default();
            let m = r.measures;
            let num = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
            w.write_record([
                r.target.clone(),
                r.scenario.label().to_string(),
                r.classifier.name().to_string(),
                r.metric_set.clone(),
                r.subset.map(|s| s.label()).unwrap_or_default(),
                r.training.join(" "),
                o.tp.to_string(),
                o.fp.to_string(),
                o.tn.to_string(),
                o.fn_.to_string(),
                num(m.map(|m| m.precision)),
                num(m.map(|m| m.recall)),
                num(m.map(|m| m.f_measure)),
                num(r.consistency),
                r.zero_denominator.to_string(),
                num(r.cpdp.as_ref().map(|c| c.objective_value)),
                r.cpdp.is_some().to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// SHA-256 of the JSONL rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    pub fn select(&self, scenario: ScenarioKind, classifier: ClassifierKind, metric_set: &str) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.scenario == scenario && r.classifier == classifier && r.metric_set == metric_set)
            .collect()
    }
}

/// Inputs of one grid run.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub scenarios: Vec<ScenarioSpec>,
    pub classifiers: Vec<ClassifierSpec>,
    pub metric_sets: Vec<MetricSet>,
    pub bins: usize,
    pub workers: usize,
}

impl GridSpec {
    pub fn new(scenarios: Vec<ScenarioSpec>, classifiers: Vec<ClassifierSpec>, metric_sets: Vec<MetricSet>) -> GridSpec {
        GridSpec {
            scenarios,
            classifiers,
            metric_sets,
            bins: DEFAULT_BINS,
            workers: 1,
        }
    }
}

fn labeled(corpus: &Corpus, idx: &[usize]) -> Result<LabeledData, String> {
    LabeledData::from_releases(idx.iter().map(|&i| &corpus.releases[i])).map_err(|e| e.to_string())
}

fn keys(corpus: &Corpus, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| corpus.releases[i].key()).collect()
}

/// Best union so far for one (target, metric set, classifier) cell.
#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    size: usize,
    index: usize,
    outcome: Outcome,
    subset: FeatureSubset,
}

impl Best {
    /// Higher objective, then fewer releases, then earlier enumeration.
    fn beats(&self, other: &Best) -> bool {
        self.value
            .total_cmp(&other.value)
            .then(other.size.cmp(&self.size))
            .then(other.index.cmp(&self.index))
            .is_gt()
    }
}

#[derive(Debug, Default)]
struct SearchState {
    best: BTreeMap<(usize, usize, usize), Best>,
    evaluated: BTreeMap<(usize, usize, usize), usize>,
    skipped: BTreeMap<(usize, usize, usize), usize>,
}

impl SearchState {
    fn offer(&mut self, key: (usize, usize, usize), cand: Best) {
        *self.evaluated.entry(key).or_default() += 1;
        match self.best.get(&key) {
            Some(b) if !cand.beats(b) => {}
            _ => {
                self.best.insert(key, cand);
            }
        }
    }

    fn skip(&mut self, key: (usize, usize, usize)) {
        *self.skipped.entry(key).or_default() += 1;
    }

    fn merge(mut self, other: SearchState) -> SearchState {
        for (k, b) in other.best {
            match self.best.get(&k) {
                Some(mine) if !b.beats(mine) => {}
                _ => {
                    self.best.insert(k, b);
                }
            }
        }
        for (k, v) in other.evaluated {
            *self.evaluated.entry(k).or_default() += v;
        }
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_default() += v;
        }
        self
    }
}

struct CpdpJob<'a> {
    corpus: &'a Corpus,
    targets: &'a [usize],
    target_data: Vec<LabeledData>,
    classifiers: &'a [ClassifierSpec],
    metric_sets: &'a [MetricSet],
    objective: Measure,
    bins: usize,
}

impl CpdpJob<'_> {
    /// Trains every (metric set, classifier) model on one union and scores it
    /// on each target foreign to all of its releases.
    fn visit(&self, index: usize, combo: &[usize], state: &mut SearchState) {
        let eligible: Vec<usize> = (0..self.targets.len())
            .filter(|&ti| {
                let project = &self.corpus.releases[self.targets[ti]].project;
                combo.iter().all(|&c| &self.corpus.releases[c].project != project)
            })
            .collect();
        if eligible.is_empty() {
            return;
        }
        let data = labeled(self.corpus, combo);
        for (si, set) in self.metric_sets.iter().enumerate() {
            let subset = data.as_ref().ok().and_then(|d| set.resolve(d, self.bins).ok());
            for (ci, spec) in self.classifiers.iter().enumerate() {
                let model: Option<Model> = match (&data, subset) {
                    (Ok(d), Some(s)) => train(spec, d, s).ok(),
                    _ => None,
                };
                for &ti in &eligible {
                    let key = (ti, si, ci);
                    let Some(model) = &model else {
                        state.skip(key);
                        continue;
                    };
                    let outcome = model.evaluate_data(&self.target_data[ti]);
                    state.offer(
                        key,
                        Best {
                            value: self.objective.of(&measures(&outcome)),
                            size: combo.len(),
                            index,
                            outcome,
                            subset: model.subset,
                        },
                    );
                }
            }
        }
    }

    fn run(&self, combos: &[Vec<usize>]) -> SearchState {
        combos
            .par_iter()
            .enumerate()
            .fold(SearchState::default, |mut st, (i, c)| {
                self.visit(i, c, &mut st);
                st
            })
            .reduce(SearchState::default, SearchState::merge)
    }
}

fn cpdp_rows(
    corpus: &Corpus,
    spec: &ScenarioSpec,
    grid: &GridSpec,
) -> Result<BTreeMap<(usize, usize, usize), ResultRow>, ScenarioError> {
    let targets: Vec<usize> = build_tasks(corpus, spec).into_iter().map(|t| t.target).collect();
    let target_data = targets
        .iter()
        .map(|&t| labeled(corpus, &[t]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ScenarioError::UnknownRelease)?;
    let all: Vec<usize> = (0..corpus.len()).collect();
    let combos = combinations(&all, spec.cpdp_max_releases);
    let job = CpdpJob {
        corpus,
        targets: &targets,
        target_data,
        classifiers: &grid.classifiers,
        metric_sets: &grid.metric_sets,
        objective: spec.cpdp_objective,
        bins: grid.bins,
    };
    let state = job.run(&combos);
    let mut rows = BTreeMap::new();
    for (ti, &t) in targets.iter().enumerate() {
        for (si, set) in grid.metric_sets.iter().enumerate() {
            for (ci, c) in grid.classifiers.iter().enumerate() {
                let key = (ti, si, ci);
                let mut row = ResultRow::blank(&corpus.releases[t], spec.kind, c.kind(), set);
                match state.best.get(&key) {
                    Some(b) => {
                        let chosen = &combos[b.index];
                        assert!(!chosen.contains(&t), "training set contains its own target");
                        row.fill(b.subset, keys(corpus, chosen), b.outcome);
                        row.cpdp = Some(CpdpChoice {
                            objective: spec.cpdp_objective,
                            objective_value: b.value,
                            combinations_evaluated: state.evaluated.get(&key).copied().unwrap_or(0),
                            combinations_skipped: state.skipped.get(&key).copied().unwrap_or(0),
                            target_leak: true,
                        });
                    }
                    None => row.error = Some(ScenarioError::NoUsableCombination(row.target.clone()).to_string()),
                }
                rows.insert((t, si, ci), row);
            }
        }
    }
    Ok(rows)
}

fn wpdp_rows(corpus: &Corpus, spec: &ScenarioSpec, grid: &GridSpec) -> BTreeMap<(usize, usize, usize), ResultRow> {
    let tasks = build_tasks(corpus, spec);
    let per_task: Vec<Vec<((usize, usize, usize), ResultRow)>> = tasks
        .par_iter()
        .map(|task| {
            let target = &corpus.releases[task.target];
            assert!(!task.training.contains(&task.target), "training set contains its own target");
            let data = labeled(corpus, &task.training);
            let test = labeled(corpus, &[task.target]);
            let mut out = Vec::new();
            for (si, set) in grid.metric_sets.iter().enumerate() {
                let subset = data.as_ref().map_err(Clone::clone).and_then(|d| set.resolve(d, grid.bins));
                for (ci, c) in grid.classifiers.iter().enumerate() {
                    let mut row = ResultRow::blank(target, spec.kind, c.kind(), set);
                    let result = match (&data, &subset, &test) {
                        (Ok(d), Ok(s), Ok(t)) => train(c, d, *s).map(|m| (m.subset, m.evaluate_data(t))).map_err(|e| e.to_string()),
                        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Err(e.clone()),
                    };
                    match result {
                        Ok((s, o)) => row.fill(s, keys(corpus, &task.training), o),
                        Err(e) => {
                            row.training = keys(corpus, &task.training);
                            row.error = Some(e);
                        }
                    }
                    out.push(((task.target, si, ci), row));
                }
            }
            out
        })
        .collect();
    per_task.into_iter().flatten().collect()
}

/// Runs every scenario × classifier × metric set over all targets. Cell
/// failures are recorded in their rows. Rows are ordered by target (manifest
/// order), scenario, classifier and metric set, each in configured order.
pub fn run_grid(corpus: &Corpus, grid: &GridSpec) -> Result<ResultTable, ScenarioError> {
    for s in &grid.scenarios {
        s.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(grid.workers.max(1))
        .build()
        .map_err(|e| ScenarioError::Pool(e.to_string()))?;
    pool.install(|| {
        let mut keyed: BTreeMap<(usize, usize, usize, usize), ResultRow> = BTreeMap::new();
        for (sc, spec) in grid.scenarios.iter().enumerate() {
            let rows = match spec.kind {
                ScenarioKind::CpdpExhaustive => cpdp_rows(corpus, spec, grid)?,
                _ => wpdp_rows(corpus, spec, grid),
            };
            for ((t, si, ci), row) in rows {
                keyed.insert((t, sc, ci, si), row);
            }
        }
        Ok(ResultTable {
            rows: keyed.into_values().collect(),
        })
    })
}

/// Result of the CPDP search for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdpResult {
    pub training: Vec<usize>,
    pub subset: FeatureSubset,
    pub outcome: Outcome,
    pub objective_value: f64,
    pub combinations_evaluated: usize,
    pub combinations_skipped: usize,
}

/// Searches the unions of up to `cpdp_max_releases` foreign releases for the
/// one whose model scores best on `target`.
pub fn exhaustive_cpdp(
    corpus: &Corpus,
    target: usize,
    spec: &ScenarioSpec,
    classifier: &ClassifierSpec,
    rule: MetricSetRule,
    bins: usize,
) -> Result<CpdpResult, ScenarioError> {
    spec.validate()?;
    let key = corpus.releases[target].key();
    let pool = foreign_pool(corpus, target);
    if pool.is_empty() {
        return Err(ScenarioError::NoForeignReleases(key));
    }
    let combos = combinations(&pool, spec.cpdp_max_releases);
    let sets = [MetricSet::new("cell", rule)];
    let classifiers = [*classifier];
    let targets = [target];
    let job = CpdpJob {
        corpus,
        targets: &targets,
        target_data: vec![labeled(corpus, &[target]).map_err(ScenarioError::UnknownRelease)?],
        classifiers: &classifiers,
        metric_sets: &sets,
        objective: spec.cpdp_objective,
        bins,
    };
    let state = job.run(&combos);
    let best = state.best.get(&(0, 0, 0)).ok_or(ScenarioError::NoUsableCombination(key))?;
    Ok(CpdpResult {
        training: combos[best.index].clone(),
        subset: best.subset,
        outcome: best.outcome,
        objective_value: best.value,
        combinations_evaluated: state.evaluated.get(&(0, 0, 0)).copied().unwrap_or(0),
        combinations_skipped: state.skipped.get(&(0, 0, 0)).copied().unwrap_or(0),
    })
}

/// Number of unions the search visits for a pool of `n` releases.
pub fn combination_count(n: usize, max: usize) -> usize {
    let mut total = 0;
    let mut c = 1usize;
    for k in 1..=max.min(n) {
        c = c * (n - k + 1) / k;
        total += c;
    }
    total
}

#[cfg(test)]
mod tests;
