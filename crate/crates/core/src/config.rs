//! Run configuration.
//!
//! ```toml
//! manifest = "data/manifest.toml"
//! out = "results"
//! seed = 1
//! workers = 4
//!
//! [[scenario]]
//! kind = "wpdp_nearest"
//!
//! [[scenario]]
//! kind = "cpdp_exhaustive"
//! cpdp_max_releases = 3
//!
//! [[classifier]]
//! kind = "logistic"
//! max_iterations = 50
//!
//! [[metric_set]]
//! name = "ALL"
//! rule = "all"
//!
//! [[metric_set]]
//! name = "TOP5"
//! rule = "top_k"
//! k = 5
//!
//! [[metric_set]]
//! name = "MIN"
//! rule = "minimum"
//! phi = 0.6
//!
//! [[metric_set]]
//! name = "CK"
//! rule = "explicit"
//! metrics = ["WMC", "DIT", "NOC", "CBO", "RFC", "LCOM"]
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MetricId;
use crate::features::{FeatureSubset, DEFAULT_BINS};
use crate::learners::{ClassifierSpec, Hyperparameters};
use crate::scenarios::ScenarioSpec;
use crate::simplify::{DEFAULT_K_MAX, DEFAULT_PHI};
use crate::stats::{Thresholds, DEFAULT_ALPHA};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// `k = 5` or `k = "auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KChoice {
    Fixed(usize),
    Auto(AutoK),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoK {
    Auto,
}

impl Default for KChoice {
    fn default() -> Self {
        KChoice::Auto(AutoK::Auto)
    }
}

/// How a named metric set is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSetDef {
    All,
    Filter,
    TopK {
        #[serde(default)]
        k: KChoice,
    },
    Minimum {
        /// Size of the Top-k universe the minimum is drawn from.
        #[serde(default)]
        k: KChoice,
        #[serde(default = "default_phi")]
        phi: f64,
    },
    Explicit {
        metrics: Vec<String>,
    },
}

fn default_phi() -> f64 {
    DEFAULT_PHI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct NamedMetricSet {
    pub name: String,
    #[serde(flatten)]
    pub def: MetricSetDef,
}

impl TryFrom<toml::Table> for NamedMetricSet {
    type Error = String;

    fn try_from(mut table: toml::Table) -> Result<Self, Self::Error> {
        let name = match table.remove("name") {
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err("`name` must be a string".into()),
            None => return Err("missing field `name`".into()),
        };
        let def = MetricSetDef::deserialize(table).map_err(|e| format!("metric set `{name}`: {e}"))?;
        Ok(NamedMetricSet { name, def })
    }
}

/// Which releases feed the occurrence tally and coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveragePopulation {
    /// Every release in the corpus.
    #[default]
    All,
    /// Only releases used as training data by some configured scenario.
    Training,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub bins: usize,
    pub k_max: usize,
    pub coverage_population: CoveragePopulation,
    /// Compare `|r|` rather than `r` against phi.
    pub absolute_correlation: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            bins: DEFAULT_BINS,
            k_max: DEFAULT_K_MAX,
            coverage_population: CoveragePopulation::All,
            absolute_correlation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    /// Metric set every other set is compared against.
    pub baseline: String,
    pub alpha: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            baseline: "ALL".into(),
            alpha: DEFAULT_ALPHA,
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_workers() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Parsed, validated run configuration. Relative paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub lenient: bool,
    #[serde(rename = "scenario", default)]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(rename = "classifier", default)]
    pub classifiers: Vec<Hyperparameters>,
    #[serde(rename = "metric_set", default)]
    pub metric_sets: Vec<NamedMetricSet>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub comparison: ComparisonConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.manifest = base.join(&config.manifest);
        config.out = base.join(&config.out);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.scenarios.is_empty() {
            return Err(invalid("scenario", "at least one scenario is required"));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            s.validate()
                .map_err(|e| invalid(format!("scenario[{i}].cpdp_max_releases"), e.to_string()))?;
        }
        if self.classifiers.is_empty() {
            return Err(invalid("classifier", "at least one classifier is required"));
        }
        for (i, c) in self.classifiers.iter().enumerate() {
            ClassifierSpec::new(*c, self.seed).map_err(|e| invalid(format!("classifier[{i}]"), e.to_string()))?;
        }
        if self.metric_sets.is_empty() {
            return Err(invalid("metric_set", "at least one metric set is required"));
        }
        let mut names = HashSet::new();
        for (i, set) in self.metric_sets.iter().enumerate() {
            let field = format!("metric_set[{i}]");
            if set.name.trim().is_empty() {
                return Err(invalid(format!("{field}.name"), "must not be empty"));
            }
            if !names.insert(set.name.as_str()) {
                return Err(invalid(format!("{field}.name"), format!("duplicate metric set `{}`", set.name)));
            }
            let check_k = |k: KChoice| match k {
                KChoice::Fixed(k) if !(1..=20).contains(&k) => {
                    Err(invalid(format!("{field}.k"), format!("must lie in 1..=20, got {k}")))
                }
                _ => Ok(()),
            };
            match &set.def {
                MetricSetDef::All | MetricSetDef::Filter => {}
                MetricSetDef::TopK { k } => check_k(*k)?,
                MetricSetDef::Minimum { k, phi } => {
                    check_k(*k)?;
                    if let KChoice::Fixed(1) = k {
                        return Err(invalid(format!("{field}.k"), "the minimum needs a universe of at least 2"));
                    }
                    if !(*phi > 0.0 && *phi < 1.0) {
                        return Err(invalid(format!("{field}.phi"), format!("must lie in (0, 1), got {phi}")));
                    }
                }
                MetricSetDef::Explicit { metrics } => {
                    explicit_subset(metrics).map_err(|m| invalid(format!("{field}.metrics"), m))?;
                }
            }
        }
        if !self.metric_sets.iter().any(|s| s.name == self.comparison.baseline) {
            return Err(invalid(
                "comparison.baseline",
                format!("no metric set named `{}`", self.comparison.baseline),
            ));
        }
        if !(self.comparison.alpha > 0.0 && self.comparison.alpha < 1.0) {
            return Err(invalid("comparison.alpha", "must lie in (0, 1)"));
        }
        if self.selection.bins < 2 {
            return Err(invalid("selection.bins", "must be at least 2"));
        }
        if !(1..=20).contains(&self.selection.k_max) {
            return Err(invalid("selection.k_max", "must lie in 1..=20"));
        }
        for (name, v) in [
            ("precision", self.thresholds.precision),
            ("recall", self.thresholds.recall),
            ("f_measure", self.thresholds.f_measure),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("thresholds.{name}"), "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn classifier_specs(&self) -> Vec<ClassifierSpec> {
        self.classifiers
            .iter()
            .map(|&params| ClassifierSpec { params, seed: self.seed })
            .collect()
    }

    /// Does any metric set need the per-release filter subsets?
    pub fn needs_selection(&self) -> bool {
        self.metric_sets
            .iter()
            .any(|s| matches!(s.def, MetricSetDef::TopK { .. } | MetricSetDef::Minimum { .. }))
    }
}

/// Parses an explicit metric list; the error names the offending entry.
pub fn explicit_subset(metrics: &[String]) -> Result<FeatureSubset, String> {
    if metrics.is_empty() {
        return Err("must list at least one metric".into());
    }
    let mut subset = FeatureSubset::empty();
    for name in metrics {
        let m: MetricId = name.parse().map_err(|_| format!("unknown metric `{name}`"))?;
        if subset.contains(m) {
            return Err(format!("metric `{name}` listed twice"));
        }
        subset.insert(m);
    }
    Ok(subset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ClassifierKind;
    use crate::scenarios::ScenarioKind;

    const BASE: &str = r#"
manifest = "m.toml"

[[scenario]]
kind = "wpdp_nearest"

[[classifier]]
kind = "naive_bayes"

[[metric_set]]
name = "ALL"
rule = "all"
"#;

    fn with(extra: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(&format!("{BASE}{extra}"))
    }

    fn field_of(e: ConfigError) -> String {
        match e {
            ConfigError::Invalid { field, .. } => field,
            other => panic!("expected a field error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_defaults() {
        let c = with("").unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.workers, 1);
        assert_eq!(c.out, PathBuf::from("results"));
        assert_eq!(c.scenarios, vec![ScenarioSpec::new(ScenarioKind::WpdpNearest)]);
        assert_eq!(c.classifiers, vec![Hyperparameters::default_for(ClassifierKind::NaiveBayes)]);
        assert_eq!(c.selection, SelectionConfig::default());
        assert_eq!(c.thresholds, Thresholds::default());
        assert!(!c.needs_selection());
    }

    #[test]
    fn every_metric_set_rule_parses() {
        let c = with(
            r#"
[[metric_set]]
name = "FILTER"
rule = "filter"

[[metric_set]]
name = "TOP5"
rule = "top_k"
k = 5

[[metric_set]]
name = "TOPAUTO"
rule = "top_k"
k = "auto"

[[metric_set]]
name = "MIN"
rule = "minimum"
phi = 0.5

[[metric_set]]
name = "PAIR"
rule = "explicit"
metrics = ["cbo", "LOC"]
"#,
        )
        .unwrap();
        let defs: Vec<&MetricSetDef> = c.metric_sets.iter().map(|s| &s.def).collect();
        assert_eq!(defs[1], &MetricSetDef::Filter);
        assert_eq!(defs[2], &MetricSetDef::TopK { k: KChoice::Fixed(5) });
        assert_eq!(defs[3], &MetricSetDef::TopK { k: KChoice::Auto(AutoK::Auto) });
        assert_eq!(defs[4], &MetricSetDef::Minimum { k: KChoice::Auto(AutoK::Auto), phi: 0.5 });
        assert!(c.needs_selection());
    }

    #[test]
    fn classifier_hyperparameters_inline() {
        let c = with("\n[[classifier]]\nkind = \"tree\"\nmin_leaf = 5\n").unwrap();
        let Hyperparameters::Tree(p) = c.classifiers[1] else { panic!() };
        assert_eq!(p.min_leaf, 5);
        assert_eq!(c.classifier_specs()[1].seed, 1);
    }

    #[test]
    fn unknown_metric_names_the_field() {
        let e = with("\n[[metric_set]]\nname = \"X\"\nrule = \"explicit\"\nmetrics = [\"CBO\", \"FOO\"]\n").unwrap_err();
        assert!(e.to_string().contains("metric_set[1].metrics"), "{e}");
        assert!(e.to_string().contains("FOO"), "{e}");
    }

    #[test]
    fn validation_failures_name_their_field() {
        let cases = [
            ("\n[[metric_set]]\nname = \"ALL\"\nrule = \"filter\"\n", "metric_set[1].name"),
            ("\n[[metric_set]]\nname = \"T\"\nrule = \"top_k\"\nk = 0\n", "metric_set[1].k"),
            ("\n[[metric_set]]\nname = \"M\"\nrule = \"minimum\"\nphi = 1.5\n", "metric_set[1].phi"),
            ("\n[comparison]\nbaseline = \"NOPE\"\n", "comparison.baseline"),
            ("\n[selection]\nbins = 1\n", "selection.bins"),
            ("\n[[classifier]]\nkind = \"logistic\"\nmax_iterations = 0\n", "classifier[1]"),
        ];
        for (extra, field) in cases {
            assert_eq!(field_of(with(extra).unwrap_err()), field, "{extra}");
        }
        let e = RunConfig::parse(&BASE.replace("manifest", "workers = 0\nmanifest")).unwrap_err();
        assert_eq!(field_of(e), "workers");
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let e = with("\n[[metric_set]]\nname = \"X\"\nrule = \"sometimes\"\n").unwrap_err();
        let ConfigError::Parse(msg) = e else { panic!() };
        assert!(msg.contains("line"), "{msg}");
        let e = RunConfig::parse("manifest = \"m\"\nbogus = 3\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn load_resolves_paths_against_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, BASE).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.manifest, dir.path().join("m.toml"));
        assert_eq!(c.out, dir.path().join("results"));
    }
}
