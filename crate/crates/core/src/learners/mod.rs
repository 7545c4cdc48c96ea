//! Binary defect classifiers trained over a chosen metric subset.
//!
//! Every model scores an instance in `[0, 1]` and flags it buggy when the
//! score is at least 0.5. Models are plain data: they serialize to versioned
//! JSON and predict without any training state.

mod logistic;
mod naive_bayes;
mod svm;
mod table;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Instance, Release, METRIC_COUNT};
use crate::features::{FeatureSubset, LabeledData};
use crate::stats::Outcome;

pub use logistic::{logistic_loss_trace, LogisticParams, LogisticSolver};
pub use naive_bayes::NaiveBayesParams;
pub use svm::{svm_objective_trace, SvmParams};
pub use table::TableParams;
pub use tree::{TreeNode, TreeParams};

/// Version written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("need at least 2 training instances, got {0}")]
    TooFewInstances(usize),
    #[error("feature subset is empty")]
    EmptySubset,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("expected {expected} feature values, got {got}")]
    MissingFeature { expected: usize, got: usize },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    Logistic,
    Tree,
    DecisionTable,
    LinearSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::Logistic,
        ClassifierKind::Tree,
        ClassifierKind::DecisionTable,
        ClassifierKind::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Tree => "tree",
            ClassifierKind::DecisionTable => "decision_table",
            ClassifierKind::LinearSvm => "linear_svm",
        }
    }

    /// Short column label for tables.
    pub fn short(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "NB",
            ClassifierKind::Logistic => "LR",
            ClassifierKind::Tree => "Tree",
            ClassifierKind::DecisionTable => "DT",
            ClassifierKind::LinearSvm => "SVM",
        }
    }

    /// Kinds that fall back to a constant predictor on single-class data.
    pub fn tolerates_single_class(self) -> bool {
        matches!(self, ClassifierKind::NaiveBayes | ClassifierKind::DecisionTable)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| LearnerError::InvalidHyperparameter(format!("unknown classifier `{s}`")))
    }
}

/// Per-kind hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    NaiveBayes(NaiveBayesParams),
    Logistic(LogisticParams),
    Tree(TreeParams),
    DecisionTable(TableParams),
    LinearSvm(SvmParams),
}

impl Hyperparameters {
    pub fn default_for(kind: ClassifierKind) -> Hyperparameters {
        match kind {
            ClassifierKind::NaiveBayes => Hyperparameters::NaiveBayes(Default::default()),
            ClassifierKind::Logistic => Hyperparameters::Logistic(Default::default()),
            ClassifierKind::Tree => Hyperparameters::Tree(Default::default()),
            ClassifierKind::DecisionTable => Hyperparameters::DecisionTable(Default::default()),
            ClassifierKind::LinearSvm => Hyperparameters::LinearSvm(Default::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            Hyperparameters::Logistic(_) => ClassifierKind::Logistic,
            Hyperparameters::Tree(_) => ClassifierKind::Tree,
            Hyperparameters::DecisionTable(_) => ClassifierKind::DecisionTable,
            Hyperparameters::LinearSvm(_) => ClassifierKind::LinearSvm,
        }
    }

    fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: &str| Err(LearnerError::InvalidHyperparameter(msg.to_string()));
        match *self {
            Hyperparameters::NaiveBayes(p) if !(p.var_floor > 0.0 && p.var_floor.is_finite()) => {
                bad("var_floor must be positive")
            }
            Hyperparameters::Logistic(p) if !(p.lambda >= 0.0 && p.lambda.is_finite()) => bad("lambda must be non-negative"),
            Hyperparameters::Logistic(p) if !(p.tolerance > 0.0) => bad("tolerance must be positive"),
            Hyperparameters::Logistic(p) if p.max_iterations == 0 => bad("max_iterations must be positive"),
            Hyperparameters::Tree(p) if p.min_leaf == 0 => bad("min_leaf must be positive"),
            Hyperparameters::Tree(p) if p.max_depth == 0 => bad("max_depth must be positive"),
            Hyperparameters::DecisionTable(p) if p.bins < 2 => bad("bins must be at least 2"),
            Hyperparameters::LinearSvm(p) if !(p.lambda > 0.0 && p.lambda.is_finite()) => bad("lambda must be positive"),
            Hyperparameters::LinearSvm(p) if p.epochs == 0 => bad("epochs must be positive"),
            _ => Ok(()),
        }
    }
}

/// A validated classifier configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: Hyperparameters, seed: u64) -> Result<ClassifierSpec, LearnerError> {
        params.validate()?;
        Ok(ClassifierSpec { params, seed })
    }

    /// Default hyperparameters for `kind`.
    pub fn default_for(kind: ClassifierKind, seed: u64) -> ClassifierSpec {
        ClassifierSpec {
            params: Hyperparameters::default_for(kind),
            seed,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }
}

/// Fitted parameters per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedParams {
    /// Single-class fallback.
    Constant { score: f64 },
    NaiveBayes(naive_bayes::NaiveBayesModel),
    Linear(LinearModel),
    Tree { nodes: Vec<TreeNode> },
    DecisionTable(table::TableModel),
}

/// `score = link(intercept + weights · x)` on original-scale features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Slope of the logistic link; 1 for logistic regression, 2 for the SVM.
    pub link_scale: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    fn margin(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub buggy: bool,
    pub score: f64,
}

impl Prediction {
    fn from_score(score: f64) -> Prediction {
        Prediction {
            buggy: score >= 0.5,
            score,
        }
    }
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub subset: FeatureSubset,
    pub train_instances: usize,
    pub positive_fraction: f64,
    pub warnings: Vec<String>,
    pub params: FittedParams,
}

impl Model {
    /// Scores values of the model's subset, in canonical metric order.
    pub fn predict_values(&self, x: &[f64]) -> Result<Prediction, LearnerError> {
        if x.len() != self.subset.len() {
            return Err(LearnerError::MissingFeature {
                expected: self.subset.len(),
                got: x.len(),
            });
        }
        Ok(Prediction::from_score(self.score(x)))
    }

    pub fn predict(&self, instance: &Instance) -> Prediction {
        let x: Vec<f64> = self.subset.iter().map(|m| instance.metric(m)).collect();
        Prediction::from_score(self.score(&x))
    }

    /// Calls `f` with the prediction for every row of `data`, in order.
    fn for_each_prediction(&self, data: &LabeledData, mut f: impl FnMut(usize, Prediction)) {
        let columns: Vec<&[f64]> = self.subset.iter().map(|m| data.column(m)).collect();
        let mut x = [0.0; METRIC_COUNT];
        let x = &mut x[..columns.len()];
        for row in 0..data.len() {
            for (v, c) in x.iter_mut().zip(&columns) {
                *v = c[row];
            }
            f(row, Prediction::from_score(self.score(x)));
        }
    }

    /// Predictions for every row of `data`.
    pub fn predict_data(&self, data: &LabeledData) -> Vec<Prediction> {
        let mut out = Vec::with_capacity(data.len());
        self.for_each_prediction(data, |_, p| out.push(p));
        out
    }

    pub fn evaluate_data(&self, data: &LabeledData) -> Outcome {
        let labels = data.labels();
        let mut o = Outcome::default();
        self.for_each_prediction(data, |row, p| match (p.buggy, labels[row]) {
            (true, true) => o.tp += 1,
            (true, false) => o.fp += 1,
            (false, false) => o.tn += 1,
            (false, true) => o.fn_ += 1,
        });
        o
    }

    fn score(&self, x: &[f64]) -> f64 {
        match &self.params {
            FittedParams::Constant { score } => *score,
            FittedParams::NaiveBayes(m) => m.score(x),
            FittedParams::Linear(m) => sigmoid(m.link_scale * m.margin(x)),
            FittedParams::Tree { nodes } => tree::score(nodes, x),
            FittedParams::DecisionTable(t) => t.score(x),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Model, LearnerError> {
        let model: Model = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::UnsupportedVersion(model.format_version));
        }
        Ok(model)
    }
}

/// Trains one classifier on `data` restricted to `subset`.
pub fn train(spec: &ClassifierSpec, data: &LabeledData, subset: FeatureSubset) -> Result<Model, LearnerError> {
    spec.params.validate()?;
    if subset.is_empty() {
        return Err(LearnerError::EmptySubset);
    }
    let n = data.len();
    if n < 2 {
        return Err(LearnerError::TooFewInstances(n));
    }
    let positives = data.positives();
    let positive_fraction = positives as f64 / n as f64;
    let mut warnings = Vec::new();
    let params = if !data.has_both_classes() {
        if !spec.kind().tolerates_single_class() {
            return Err(LearnerError::SingleClassData);
        }
        FittedParams::Constant {
            score: if positives > 0 { 1.0 } else { 0.0 },
        }
    } else {
        let x = data.project(subset);
        let y = data.labels();
        let d = subset.len();
        match spec.params {
            Hyperparameters::NaiveBayes(p) => FittedParams::NaiveBayes(naive_bayes::fit(&x, y, d, &p)),
            Hyperparameters::Logistic(p) => {
                let (model, dropped, _) = logistic::fit(&x, y, d, &p, false);
                for j in dropped {
                    let m = subset.to_vec()[j];
                    warnings.push(format!("constant column {m} dropped"));
                }
                FittedParams::Linear(model)
            }
            Hyperparameters::Tree(p) => FittedParams::Tree {
                nodes: tree::fit(&x, y, d, &p),
            },
            Hyperparameters::DecisionTable(p) => FittedParams::DecisionTable(table::fit(&x, y, d, &p)),
            Hyperparameters::LinearSvm(p) => FittedParams::Linear(svm::fit(&x, y, d, &p, spec.seed)),
        }
    };
    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        kind: spec.kind(),
        subset,
        train_instances: n,
        positive_fraction,
        warnings,
        params,
    })
}

/// Confusion counts of `model` on a binarized release.
pub fn evaluate_on(model: &Model, test: &Release) -> Result<Outcome, LearnerError> {
    let labels = test.labels()?;
    let flags: Vec<bool> = test.instances.iter().map(|i| model.predict(i).buggy).collect();
    Ok(Outcome::from_predictions(&flags, &labels))
}

/// Column means and population standard deviations of a row-major matrix.
pub(crate) fn column_moments(x: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() / d;
    let mut mean = vec![0.0; d];
    for row in x.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for row in x.chunks_exact(d) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let sd = var.into_iter().map(|s| (s / n as f64).sqrt()).collect();
    (mean, sd)
}
