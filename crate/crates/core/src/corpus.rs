//! PROMISE-format release ingestion and preprocessing.
//!
//! A release CSV carries 20 static code metrics per class plus a bug count.
//! Parsing maps the metric columns onto the canonical [`MetricId`] order no
//! matter how the file orders them. Preprocessing is tracked on the release so
//! the log-filter cannot be applied twice and labels exist only after
//! binarization.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of static code metrics in the vocabulary.
pub const METRIC_COUNT: usize = 20;

/// One of the twenty static code metrics, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricId {
    Wmc,
    Dit,
    Noc,
    Cbo,
    Rfc,
    Lcom,
    Ca,
    Ce,
    Npm,
    Lcom3,
    Loc,
    Dam,
    Moa,
    Mfa,
    Cam,
    Ic,
    Cbm,
    Amc,
    MaxCc,
    AvgCc,
}

impl MetricId {
    /// All metrics in canonical order.
    pub const ALL: [MetricId; METRIC_COUNT] = [
        MetricId::Wmc,
        MetricId::Dit,
        MetricId::Noc,
        MetricId::Cbo,
        MetricId::Rfc,
        MetricId::Lcom,
        MetricId::Ca,
        MetricId::Ce,
        MetricId::Npm,
        MetricId::Lcom3,
        MetricId::Loc,
        MetricId::Dam,
        MetricId::Moa,
        MetricId::Mfa,
        MetricId::Cam,
        MetricId::Ic,
        MetricId::Cbm,
        MetricId::Amc,
        MetricId::MaxCc,
        MetricId::AvgCc,
    ];

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<MetricId> {
        Self::ALL.get(index).copied()
    }

    /// Display name, e.g. `MAX_CC`.
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Wmc => "WMC",
            MetricId::Dit => "DIT",
            MetricId::Noc => "NOC",
            MetricId::Cbo => "CBO",
            MetricId::Rfc => "RFC",
            MetricId::Lcom => "LCOM",
            MetricId::Ca => "CA",
            MetricId::Ce => "CE",
            MetricId::Npm => "NPM",
            MetricId::Lcom3 => "LCOM3",
            MetricId::Loc => "LOC",
            MetricId::Dam => "DAM",
            MetricId::Moa => "MOA",
            MetricId::Mfa => "MFA",
            MetricId::Cam => "CAM",
            MetricId::Ic => "IC",
            MetricId::Cbm => "CBM",
            MetricId::Amc => "AMC",
            MetricId::MaxCc => "MAX_CC",
            MetricId::AvgCc => "AVG_CC",
        }
    }

    /// Lower-case CSV column header used by PROMISE files.
    pub fn column(self) -> String {
        self.name().to_ascii_lowercase()
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown metric `{0}`")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricId {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

impl TryFrom<String> for MetricId {
    type Error = UnknownMetric;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<MetricId> for String {
    fn from(value: MetricId) -> Self {
        value.name().to_string()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("release file has no data rows")]
    EmptyFile,
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}` (use lenient parsing to ignore it)")]
    UnexpectedColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: negative metric value {value}")]
    NegativeMetric { row: usize, column: String, value: f64 },
    #[error("row {row}: negative bug count {value}")]
    NegativeBugCount { row: usize, value: i64 },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("release {0} is already log-filtered")]
    AlreadyFiltered(String),
    #[error("release {0} has not been binarized")]
    NotBinarized(String),
    #[error("duplicate release {0}")]
    DuplicateRelease(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One class file of a release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub class_name: String,
    pub metrics: [f64; METRIC_COUNT],
    pub bug_count: u32,
    /// Set by [`binarize_labels`]; `None` on raw releases.
    pub buggy: Option<bool>,
}

impl Instance {
    pub fn metric(&self, id: MetricId) -> f64 {
        self.metrics[id.index()]
    }
}

/// Preprocessing applied to a release so far. Both flags unset means raw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub log_filtered: bool,
    pub binarized: bool,
}

impl Preprocessing {
    pub fn is_raw(&self) -> bool {
        !self.log_filtered && !self.binarized
    }
}

/// One software release, e.g. Ant 1.7.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Release {
    pub project: String,
    pub version: String,
    pub instances: Vec<Instance>,
    pub preprocessing: Preprocessing,
}

impl Release {
    /// `project-version`, the key used in reports.
    pub fn key(&self) -> String {
        format!("{}-{}", self.project, self.version)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn defective_count(&self) -> usize {
        self.instances.iter().filter(|i| i.bug_count > 0).count()
    }

    /// Labels as produced by binarization.
    pub fn labels(&self) -> Result<Vec<bool>, CorpusError> {
        if !self.preprocessing.binarized {
            return Err(CorpusError::NotBinarized(self.key()));
        }
        Ok(self
            .instances
            .iter()
            .map(|i| i.buggy.unwrap_or(i.bug_count > 0))
            .collect())
    }

    /// Column of one metric across all instances.
    pub fn column(&self, id: MetricId) -> Vec<f64> {
        self.instances.iter().map(|i| i.metric(id)).collect()
    }

    /// Writes the release back out in PROMISE layout. Values use the shortest
    /// representation that parses back to the same bits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,version,class");
        for m in MetricId::ALL {
            out.push(',');
            out.push_str(&m.column());
        }
        out.push_str(",bug\n");
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for inst in &self.instances {
            let mut record: Vec<String> = Vec::with_capacity(METRIC_COUNT + 4);
            record.push(self.project.clone());
            record.push(self.version.clone());
            record.push(inst.class_name.clone());
            record.extend(inst.metrics.iter().map(|v| format!("{v:?}")));
            record.push(inst.bug_count.to_string());
            wtr.write_record(&record).expect("in-memory csv write");
        }
        let body = wtr.into_inner().expect("in-memory csv flush");
        out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
        out
    }
}

/// Header names accepted as identifier columns.
const IDENTIFIER_COLUMNS: [&str; 5] = ["name", "version", "name.1", "class", "class_name"];
const BUG_COLUMN: &str = "bug";

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Ignore unknown columns instead of rejecting the file.
    pub lenient: bool,
}

/// Parses a PROMISE release CSV into a raw [`Release`].
pub fn parse_release(csv_text: &str, project: &str, version: &str) -> Result<Release, CorpusError> {
    parse_release_with(csv_text, project, version, ParseOptions::default())
}

pub fn parse_release_with(
    csv_text: &str,
    project: &str,
    version: &str,
    options: ParseOptions,
) -> Result<Release, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(CorpusError::EmptyFile);
    }

    let mut metric_cols: [Option<usize>; METRIC_COUNT] = [None; METRIC_COUNT];
    let mut bug_col = None;
    let mut class_col = None;
    for (col, header) in headers.iter().enumerate() {
        if header == BUG_COLUMN {
            if bug_col.replace(col).is_some() {
                return Err(CorpusError::DuplicateColumn(header.clone()));
            }
        } else if let Ok(metric) = header.parse::<MetricId>() {
            if metric_cols[metric.index()].replace(col).is_some() {
                return Err(CorpusError::DuplicateColumn(header.clone()));
            }
        } else if IDENTIFIER_COLUMNS.contains(&header.as_str()) {
            // PROMISE files carry `name, version, name`; the last name-like
            // column holds the class path.
            if header != "version" {
                class_col = Some(col);
            }
        } else if !options.lenient {
            return Err(CorpusError::UnexpectedColumn(header.clone()));
        }
    }
    let mut columns = [0usize; METRIC_COUNT];
    for m in MetricId::ALL {
        columns[m.index()] =
            metric_cols[m.index()].ok_or_else(|| CorpusError::MissingColumn(m.column()))?;
    }
    let bug_col = bug_col.ok_or_else(|| CorpusError::MissingColumn(BUG_COLUMN.into()))?;

    let mut instances = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based data row number, header excluded
        let row = i + 1;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if record.len() != headers.len() {
            return Err(CorpusError::RaggedRow {
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let mut metrics = [0.0; METRIC_COUNT];
        for m in MetricId::ALL {
            let cell = &record[columns[m.index()]];
            let value = parse_number(cell).ok_or_else(|| CorpusError::NonNumericCell {
                row,
                column: m.column(),
                value: cell.to_string(),
            })?;
            if value < 0.0 {
                return Err(CorpusError::NegativeMetric {
                    row,
                    column: m.column(),
                    value,
                });
            }
            metrics[m.index()] = value;
        }
        let bug_count = parse_bug_count(&record[bug_col], row)?;
        let class_name = class_col
            .map(|c| record[c].to_string())
            .unwrap_or_else(|| format!("row{row}"));
        instances.push(Instance {
            class_name,
            metrics,
            bug_count,
            buggy: None,
        });
    }
    if instances.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    Ok(Release {
        project: project.to_string(),
        version: version.to_string(),
        instances,
        preprocessing: Preprocessing::default(),
    })
}

fn parse_number(cell: &str) -> Option<f64> {
    // f64::from_str also accepts "inf"/"nan"; only finite decimal or
    // scientific notation is allowed here.
    let ok = !cell.is_empty()
        && cell
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    if !ok {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bug_count(cell: &str, row: usize) -> Result<u32, CorpusError> {
    let non_numeric = || CorpusError::NonNumericCell {
        row,
        column: BUG_COLUMN.into(),
        value: cell.to_string(),
    };
    let value = parse_number(cell).ok_or_else(non_numeric)?;
    if value.fract() != 0.0 {
        return Err(non_numeric());
    }
    if value < 0.0 {
        return Err(CorpusError::NegativeBugCount {
            row,
            value: value as i64,
        });
    }
    u32::try_from(value as u64).map_err(|_| non_numeric())
}

/// Replaces every metric value `v` by `ln(v + 1)`.
pub fn log_filter(mut release: Release) -> Result<Release, CorpusError> {
    if release.preprocessing.log_filtered {
        return Err(CorpusError::AlreadyFiltered(release.key()));
    }
    for inst in &mut release.instances {
        for v in inst.metrics.iter_mut() {
            *v = v.ln_1p();
        }
    }
    release.preprocessing.log_filtered = true;
    Ok(release)
}

/// Labels each instance buggy iff its bug count is positive.
pub fn binarize_labels(mut release: Release) -> Release {
    for inst in &mut release.instances {
        inst.buggy = Some(inst.bug_count > 0);
    }
    release.preprocessing.binarized = true;
    release
}

/// Releases grouped by project, in manifest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub releases: Vec<Release>,
}

impl Corpus {
    pub fn new(releases: Vec<Release>) -> Result<Corpus, CorpusError> {
        let mut seen = std::collections::HashSet::new();
        for r in &releases {
            if !seen.insert((r.project.clone(), r.version.clone())) {
                return Err(CorpusError::DuplicateRelease(r.key()));
            }
        }
        Ok(Corpus { releases })
    }

    /// Loads every release named in a manifest. Releases stay raw.
    pub fn load(manifest_path: &Path, options: ParseOptions) -> Result<Corpus, CorpusError> {
        let manifest = Manifest::read(manifest_path)?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut releases = Vec::new();
        for project in &manifest.projects {
            for entry in &project.releases {
                let path = base.join(&entry.path);
                let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
                    path: path.clone(),
                    source,
                })?;
                let release = parse_release_with(&text, &project.name, &entry.version, options)
                    .map_err(|e| CorpusError::InFile {
                        path: path.clone(),
                        source: Box::new(e),
                    })?;
                releases.push(release);
            }
        }
        Corpus::new(releases)
    }

    /// Applies the log-filter and label binarization to every release.
    pub fn preprocess(self) -> Result<Corpus, CorpusError> {
        let releases = self
            .releases
            .into_iter()
            .map(|r| log_filter(r).map(binarize_labels))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus { releases })
    }

    pub fn len(&self) -> usize {
        self.releases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.releases.is_empty()
    }

    pub fn find(&self, project: &str, version: &str) -> Option<usize> {
        self.releases
            .iter()
            .position(|r| r.project == project && r.version == version)
    }

    pub fn find_key(&self, key: &str) -> Option<usize> {
        self.releases.iter().position(|r| r.key() == key)
    }

    /// Project names in first-appearance order.
    pub fn projects(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.releases {
            if !out.contains(&r.project.as_str()) {
                out.push(&r.project);
            }
        }
        out
    }

    /// Indices of the releases of `project`, in manifest order.
    pub fn project_releases(&self, project: &str) -> Vec<usize> {
        (0..self.releases.len())
            .filter(|&i| self.releases[i].project == project)
            .collect()
    }
}

/// Project → ordered versions → file path.
///
/// ```toml
/// [[project]]
/// name = "ant"
/// releases = [
///   { version = "1.3", path = "ant-1.3.csv" },
///   { version = "1.4", path = "ant-1.4.csv" },
/// ]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "project")]
    pub projects: Vec<ManifestProject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestProject {
    pub name: String,
    pub releases: Vec<ManifestRelease>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRelease {
    pub version: String,
    pub path: PathBuf,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Manifest::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Manifest, CorpusError> {
        let manifest: Manifest =
            toml::from_str(text).map_err(|e| CorpusError::Manifest(e.to_string()))?;
        if manifest.projects.is_empty() {
            return Err(CorpusError::Manifest("no projects listed".into()));
        }
        for p in &manifest.projects {
            if p.releases.is_empty() {
                return Err(CorpusError::Manifest(format!(
                    "project `{}` lists no releases",
                    p.name
                )));
            }
        }
        Ok(manifest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// One row of the corpus summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub project: String,
    pub version: String,
    pub instances: usize,
    pub defective: usize,
    /// Percentage rounded to one decimal.
    pub percent_defective: f64,
}

pub fn corpus_summary(corpus: &Corpus) -> Result<Vec<SummaryRow>, CorpusError> {
    corpus
        .releases
        .iter()
        .map(|r| {
            let labels = r.labels()?;
            let defective = labels.iter().filter(|&&b| b).count();
            let pct = 100.0 * defective as f64 / labels.len() as f64;
            Ok(SummaryRow {
                project: r.project.clone(),
                version: r.version.clone(),
                instances: labels.len(),
                defective,
                percent_defective: (pct * 10.0).round() / 10.0,
            })
        })
        .collect()
}

/// Counts of (instances, defective) per release key, handy for fixtures.
pub fn defect_counts(corpus: &Corpus) -> BTreeMap<String, (usize, usize)> {
    corpus
        .releases
        .iter()
        .map(|r| (r.key(), (r.len(), r.defective_count())))
        .collect()
}
