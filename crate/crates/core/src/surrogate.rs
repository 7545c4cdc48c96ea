//! Deterministic PROMISE-shaped corpus generator.
//!
//! Produces the same 34 releases of 10 projects as the public PROMISE
//! collection, with the same instance and defective-class counts, but with
//! metric values drawn from a synthetic model. Sizes match, so anything whose
//! cost depends on the corpus shape (the exhaustive cross-project search in
//! particular) behaves like the real data. Metric distributions do not, so
//! selected subsets and measures are not comparable to published values.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{
    Corpus, CorpusError, Instance, Manifest, ManifestProject, ManifestRelease, MetricId,
    Preprocessing, Release, METRIC_COUNT,
};

/// (project, version, #instances, #defective) for the 34 PROMISE releases.
pub const PROMISE_LAYOUT: [(&str, &str, usize, usize); 34] = [
    ("ant", "1.3", 125, 20),
    ("ant", "1.4", 178, 40),
    ("ant", "1.5", 293, 32),
    ("ant", "1.6", 351, 92),
    ("ant", "1.7", 745, 166),
    ("camel", "1.0", 339, 13),
    ("camel", "1.2", 608, 216),
    ("camel", "1.4", 872, 145),
    ("camel", "1.6", 965, 188),
    ("ivy", "1.1", 111, 63),
    ("ivy", "1.4", 241, 16),
    ("ivy", "2.0", 352, 40),
    ("jedit", "3.2", 272, 90),
    ("jedit", "4.0", 306, 75),
    ("lucene", "2.0", 195, 91),
    ("lucene", "2.2", 247, 144),
    ("lucene", "2.4", 340, 203),
    ("poi", "1.5", 237, 141),
    ("poi", "2.0", 314, 37),
    ("poi", "2.5", 385, 248),
    ("poi", "3.0", 442, 281),
    ("synapse", "1.0", 157, 16),
    ("synapse", "1.1", 222, 60),
    ("synapse", "1.2", 256, 86),
    ("velocity", "1.4", 196, 147),
    ("velocity", "1.5", 214, 142),
    ("velocity", "1.6", 229, 78),
    ("xalan", "2.4", 723, 110),
    ("xalan", "2.5", 803, 387),
    ("xalan", "2.6", 885, 411),
    ("xerces", "init", 162, 77),
    ("xerces", "1.2", 440, 71),
    ("xerces", "1.3", 453, 69),
    ("xerces", "1.4", 588, 437),
];

/// Raw (un-preprocessed) corpus with the PROMISE layout.
pub fn promise_shaped_corpus(seed: u64) -> Corpus {
    let layout: Vec<(String, String, usize, usize)> = PROMISE_LAYOUT
        .iter()
        .map(|&(p, v, n, d)| (p.to_string(), v.to_string(), n, d))
        .collect();
    synthetic_corpus(&layout, seed)
}

/// Raw corpus with an arbitrary layout of (project, version, #instances, #defective).
pub fn synthetic_corpus(layout: &[(String, String, usize, usize)], seed: u64) -> Corpus {
    let mut projects: Vec<&str> = Vec::new();
    for (p, ..) in layout {
        if !projects.contains(&p.as_str()) {
            projects.push(p);
        }
    }
    let releases = layout
        .iter()
        .enumerate()
        .map(|(i, (project, version, n, d))| {
            let project_idx = projects.iter().position(|p| p == project).unwrap();
            synthetic_release(project, version, *n, *d, project_idx, seed, i as u64)
        })
        .collect();
    Corpus::new(releases).expect("layout has unique releases")
}

fn synthetic_release(
    project: &str,
    version: &str,
    n: usize,
    defective: usize,
    project_idx: usize,
    seed: u64,
    stream: u64,
) -> Release {
    assert!(defective <= n && n > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream);
    let normal = Normal::new(0.0, 1.0).unwrap();
    // Project-level shifts keep releases of one project closer to each other
    // than to other projects.
    let mut prng = ChaCha8Rng::seed_from_u64(seed ^ (project_idx as u64 + 1) * 0x51_7CC1_B727_220A);
    let size_shift: f64 = prng.random_range(-0.4..0.4);
    let coupling_shift: f64 = prng.random_range(-0.4..0.4);
    let bug_weight_size: f64 = prng.random_range(0.5..1.2);
    let bug_weight_coupling: f64 = prng.random_range(0.2..0.9);

    let mut rows = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = || normal.sample(&mut rng);
        let size = size_shift + z();
        let coupling = coupling_shift + 0.5 * size + 0.85 * z();
        let cohesion = 0.6 * size + 0.8 * z();
        let mut m = [0.0; METRIC_COUNT];
        let count = |x: f64| x.exp().round().max(0.0);
        let wmc = count(1.9 + 0.9 * size + 0.25 * z());
        let loc = count(4.6 + 1.15 * size + 0.35 * z());
        m[MetricId::Wmc.index()] = wmc;
        m[MetricId::Dit.index()] = (1.0 + (1.2 + 0.8 * z()).max(0.0)).floor().min(7.0);
        m[MetricId::Noc.index()] = count(-1.2 + 1.0 * z());
        m[MetricId::Cbo.index()] = count(1.6 + 0.75 * coupling + 0.2 * z());
        m[MetricId::Rfc.index()] = count(2.9 + 1.0 * size + 0.2 * coupling + 0.2 * z());
        m[MetricId::Lcom.index()] = count(2.2 + 1.4 * cohesion + 0.9 * z());
        m[MetricId::Ca.index()] = count(0.9 + 0.5 * coupling + 0.9 * z());
        m[MetricId::Ce.index()] = count(1.2 + 0.8 * coupling + 0.35 * size + 0.4 * z());
        m[MetricId::Npm.index()] = (wmc * (0.5 + 0.4 * sigmoid(z()))).round();
        m[MetricId::Lcom3.index()] = 2.0 * sigmoid(-0.3 * cohesion + 0.8 * z());
        m[MetricId::Loc.index()] = loc;
        m[MetricId::Dam.index()] = sigmoid(1.0 + 1.5 * z()).clamp(0.0, 1.0);
        m[MetricId::Moa.index()] = count(-1.0 + 0.6 * size + 0.8 * z());
        m[MetricId::Mfa.index()] = sigmoid(-0.5 + 2.0 * z()).clamp(0.0, 1.0);
        m[MetricId::Cam.index()] = sigmoid(-0.2 - 0.7 * size + 0.6 * z()).clamp(0.0, 1.0);
        m[MetricId::Ic.index()] = count(-1.5 + 0.9 * z()).min(5.0);
        m[MetricId::Cbm.index()] = count(-1.0 + 1.1 * z()).min(20.0);
        m[MetricId::Amc.index()] = loc / wmc.max(1.0);
        m[MetricId::MaxCc.index()] = count(1.0 + 0.5 * size + 0.5 * z());
        m[MetricId::AvgCc.index()] = (m[MetricId::MaxCc.index()] * sigmoid(0.4 * z())).max(0.0);
        for v in m.iter_mut() {
            // four decimals, like PROMISE ratio metrics
            *v = (*v * 1e4).round() / 1e4;
        }
        scores.push(bug_weight_size * size + bug_weight_coupling * coupling + 1.1 * z());
        rows.push((format!("{project}.pkg.Class{i}"), m));
    }

    // Exactly `defective` classes get bugs: the highest risk scores.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut bugs = vec![0u32; n];
    for &i in order.iter().take(defective) {
        let mut b = 1;
        while b < 12 && rng.random::<f64>() < 0.35 {
            b += 1;
        }
        bugs[i] = b;
    }

    Release {
        project: project.to_string(),
        version: version.to_string(),
        instances: rows
            .into_iter()
            .zip(bugs)
            .map(|((class_name, metrics), bug_count)| Instance {
                class_name,
                metrics,
                bug_count,
                buggy: None,
            })
            .collect(),
        preprocessing: Preprocessing::default(),
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Writes one CSV per release plus `manifest.toml`; returns the manifest path.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<PathBuf, CorpusError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut projects: Vec<ManifestProject> = Vec::new();
    for r in &corpus.releases {
        let file = format!("{}.csv", r.key());
        let path = dir.join(&file);
        std::fs::write(&path, r.to_csv()).map_err(io(&path))?;
        let entry = ManifestRelease {
            version: r.version.clone(),
            path: PathBuf::from(file),
        };
        match projects.iter_mut().find(|p| p.name == r.project) {
            Some(p) => p.releases.push(entry),
            None => projects.push(ManifestProject {
                name: r.project.clone(),
                releases: vec![entry],
            }),
        }
    }
    let manifest_path = dir.join("manifest.toml");
    let manifest = Manifest { projects };
    std::fs::write(&manifest_path, manifest.to_toml()).map_err(io(&manifest_path))?;
    Ok(manifest_path)
}
