//! Trains every classifier on one release and scores it on the next.
//!
//! `cargo run --release --example train_evaluate`

use std::error::Error;

use defectkit::features::{FeatureSubset, LabeledData};
use defectkit::learners::{evaluate_on, train, ClassifierKind, ClassifierSpec, Model};
use defectkit::stats::{consistency, measures};
use defectkit::surrogate::promise_shaped_corpus;

fn main() -> Result<(), Box<dyn Error>> {
    let corpus = promise_shaped_corpus(7).preprocess()?;
    let ant = corpus.project_releases("ant");
    let (older, newer) = (&corpus.releases[ant[0]], &corpus.releases[ant[1]]);
    let training = LabeledData::from_releases([older])?;
    let subset: FeatureSubset = "CBO+LOC+LCOM".parse()?;
    println!("train {} -> test {} on {subset}\n", older.key(), newer.key());
    println!("| Classifier | Precision | Recall | F | Consistency |\n|---|---:|---:|---:|---:|");
    for kind in ClassifierKind::ALL {
        let model = train(&ClassifierSpec::default_for(kind, 1), &training, subset)?;
        let outcome = evaluate_on(&model, newer)?;
        let m = measures(&outcome);
        let c = consistency(&outcome).map_or("n/a".to_string(), |c| format!("{c:.3}"));
        println!("| {kind} | {:.3} | {:.3} | {:.3} | {c} |", m.precision, m.recall, m.f_measure);

        // models serialize losslessly
        assert_eq!(Model::from_json(&model.to_json())?.to_json(), model.to_json());
    }
    Ok(())
}
